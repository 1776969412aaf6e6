from django.test import SimpleTestCase

from core.decorators import reports_errors
from core.templatetags.core_extras import coord, points, tick


class ReportsErrorsTests(SimpleTestCase):
    def test_handled_error_becomes_reply(self):
        @reports_errors(ValueError)
        def handler():
            raise ValueError('bad value\nmore detail')

        self.assertEqual(handler(), 'error: bad value')

    def test_message_falls_back_to_type(self):
        @reports_errors(KeyError, OSError)
        def handler():
            raise OSError()

        self.assertEqual(handler(), 'error: OSError')

    def test_other_errors_escape(self):
        @reports_errors(ValueError)
        def handler():
            raise TypeError('no')

        with self.assertRaises(TypeError):
            handler()

    def test_passes_result_through(self):
        @reports_errors(ValueError)
        def handler(a, b=1):
            return a + b

        self.assertEqual(handler(2, b=3), 5)
        self.assertEqual(handler.__name__, 'handler')


class SvgFilterTests(SimpleTestCase):
    def test_coord(self):
        self.assertEqual(coord(450), '450')
        self.assertEqual(coord(12.5), '12.5')
        self.assertEqual(coord(1 / 3), '0.33')
        self.assertEqual(coord(-0.001), '0')

    def test_points(self):
        self.assertEqual(points([(60, 450.0), (70.125, 20)]), '60,450 70.13,20')
        self.assertEqual(points([]), '')

    def test_tick(self):
        self.assertEqual(tick(3.0), '3')
        self.assertEqual(tick(2.5), '2.5')
