import io
import os

from django.test import SimpleTestCase

from epidemic.exceptions import PopulationDataError
from epidemic.population import (
    ContactEvent,
    TemporalContactGraph,
    generate_random,
    load_contacts,
    load_individuals,
    read_contacts,
    read_individuals,
    write_contacts,
    write_individuals,
)
from epidemic.specs import Regime

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


class LoadIndividualsTests(SimpleTestCase):
    def test_sorted_and_deduplicated(self):
        with self.assertLogs('epidemic.population', level='WARNING') as logs:
            ids = load_individuals(b"carol\nalice\nbob\nalice\n")
        self.assertEqual(ids, ('alice', 'bob', 'carol'))
        self.assertIn('duplicate individual', logs.output[0])

    def test_blank_lines_ignored(self):
        self.assertEqual(load_individuals(b"\nb\n\na\n"), ('a', 'b'))

    def test_empty_file(self):
        with self.assertRaises(PopulationDataError) as ctx:
            load_individuals(b"\n\n")
        self.assertEqual(ctx.exception.code, 'EmptyFile')

    def test_undecodable_bytes(self):
        for source in (b'alice\n\xff\xfe\n', io.BytesIO(b'alice\n\xff\xfe\n')):
            with self.subTest(source=type(source).__name__):
                with self.assertRaisesMessage(PopulationDataError, 'line 2') as ctx:
                    load_individuals(source)
                self.assertEqual(ctx.exception.code, 'MalformedRow')

    def test_nul_byte(self):
        with self.assertRaises(PopulationDataError) as ctx:
            load_individuals(io.BytesIO(b'alice\x00\n'))
        self.assertEqual(ctx.exception.code, 'MalformedRow')

    def test_byte_order_mark_is_dropped(self):
        self.assertEqual(load_individuals(b'\xef\xbb\xbfbob\nalice\n'), ('alice', 'bob'))
        self.assertEqual(load_individuals(io.BytesIO(b'\xef\xbb\xbfbob\n')), ('bob',))

    def test_fixture(self):
        self.assertEqual(read_individuals(os.path.join(FIXTURES, 'individualsList.csv')), ('alice', 'bob', 'carol'))


class LoadContactsTests(SimpleTestCase):
    ids = ('a', 'b', 'c')

    def test_rows(self):
        events = load_contacts(b"b,a,1\nc,b,2\n", self.ids)
        self.assertEqual(events, {ContactEvent('b', 'a', 1), ContactEvent('c', 'b', 2)})

    def test_undirected_adds_reverse(self):
        events = load_contacts(b"b,a,1\n", self.ids, undirected=True)
        self.assertEqual(events, {ContactEvent('b', 'a', 1), ContactEvent('a', 'b', 1)})

    def test_errors(self):
        cases = {
            b"b,a\n": 'MalformedRow',
            b"b,a,x\n": 'MalformedRow',
            b"b,z,1\n": 'UnknownIndividual',
            b"b,a,0\n": 'NonPositiveTimestep',
            b"a,a,1\n": 'MalformedRow',
        }
        for data, code in cases.items():
            with self.subTest(data=data):
                with self.assertRaises(PopulationDataError) as ctx:
                    load_contacts(data, self.ids)
                self.assertEqual(ctx.exception.code, code)

    def test_error_names_line(self):
        with self.assertRaisesMessage(PopulationDataError, 'line 2'):
            load_contacts(b"b,a,1\nb,q,1\n", self.ids)

    def test_undecodable_row(self):
        with self.assertRaisesMessage(PopulationDataError, 'line 2') as ctx:
            load_contacts(io.BytesIO(b'b,a,1\n\xff,b,1\n'), self.ids)
        self.assertEqual(ctx.exception.code, 'MalformedRow')

    def test_duplicates_and_late_rows_warn(self):
        with self.assertLogs('epidemic.population', level='WARNING') as logs:
            events = load_contacts(b"b,a,1\nb,a,1\nc,a,5\n", self.ids, horizon=3)
        self.assertEqual(len(events), 2)
        self.assertTrue(any('duplicate contact' in line for line in logs.output))
        self.assertTrue(any('beyond 2' in line for line in logs.output))

    def test_fixture(self):
        ids = read_individuals(os.path.join(FIXTURES, 'individualsList.csv'))
        events = read_contacts(os.path.join(FIXTURES, 'contactList.csv'), ids)
        self.assertEqual(len(events), 3)


class GraphTests(SimpleTestCase):
    def test_unknown_endpoint(self):
        with self.assertRaises(PopulationDataError):
            TemporalContactGraph(('a',), frozenset({ContactEvent('a', 'b', 1)}))

    def test_events_by_timestep(self):
        graph = TemporalContactGraph(('a', 'b', 'c'), frozenset({
            ContactEvent('c', 'a', 1), ContactEvent('b', 'a', 1), ContactEvent('a', 'c', 2),
        }))
        self.assertEqual([e.target for e in graph.events_at(1)], ['b', 'c'])
        self.assertEqual(graph.events_at(3), ())


class GenerateRandomTests(SimpleTestCase):
    def test_pure_function_of_arguments(self):
        first = generate_random(20, 0.2, Regime.PER_TIMESTEP, 6, seed=11)
        second = generate_random(20, 0.2, Regime.PER_TIMESTEP, 6, seed=11)
        self.assertEqual(first, second)
        self.assertNotEqual(first.events, generate_random(20, 0.2, Regime.PER_TIMESTEP, 6, seed=12).events)

    def test_ids_sort_lexicographically(self):
        graph = generate_random(11, 0.0, Regime.STATIC, 3, seed=0)
        self.assertEqual(graph.individuals[:3], ('p1', 'p10', 'p11'))
        self.assertEqual(graph.events, frozenset())

    def test_complete_graph_is_symmetric(self):
        graph = generate_random(4, 1.0, Regime.STATIC, 3, seed=5)
        # 6 pairs, both directions, timesteps 1..2
        self.assertEqual(len(graph.events), 6 * 2 * 2)
        for event in graph.events:
            self.assertIn(ContactEvent(event.source, event.target, event.timestep), graph.events)
            self.assertLessEqual(event.timestep, 2)

    def test_static_repeats_pairs(self):
        graph = generate_random(15, 0.3, Regime.STATIC, 5, seed=3)
        pairs = [{(e.target, e.source) for e in graph.events_at(t)} for t in range(1, 5)]
        self.assertTrue(all(p == pairs[0] for p in pairs))

    def test_zero_population(self):
        with self.assertRaises(PopulationDataError):
            generate_random(0, 0.5, Regime.STATIC, 3, seed=0)


class WriteTests(SimpleTestCase):
    def test_written_contacts_load_back(self):
        graph = generate_random(8, 0.4, Regime.PER_TIMESTEP, 5, seed=9)
        individuals, contacts = io.StringIO(), io.StringIO()
        write_individuals(graph.individuals, individuals)
        write_contacts(graph.events, contacts)
        ids = load_individuals(individuals.getvalue().encode())
        self.assertEqual(ids, graph.individuals)
        self.assertEqual(load_contacts(contacts.getvalue().encode(), ids), graph.events)

    def test_contacts_sorted(self):
        stream = io.StringIO()
        write_contacts({ContactEvent('b', 'a', 2), ContactEvent('a', 'b', 1), ContactEvent('b', 'a', 1)}, stream)
        self.assertEqual(stream.getvalue(), "a,b,1\nb,a,1\nb,a,2\n")
