import os

from epidemic.emission import atom_quoted

HERE = os.path.dirname(__file__)
FIXTURES = os.path.join(HERE, 'fixtures')
FLU = os.path.join(FIXTURES, 'flu.model')
GOLDEN = os.path.join(HERE, 'golden', 'flu_relational.pl')


def golden_program(data_dir=None):
    """The flu program; with ``data_dir`` its csv_load paths point into that directory."""
    with open(GOLDEN, encoding='utf-8', newline='') as f:
        text = f.read()
    if data_dir is not None:
        for name in ('individualsList.csv', 'contactList.csv'):
            text = text.replace(f"csv_load('{name}',", f"csv_load({atom_quoted(os.path.join(data_dir, name))},")
    return text
