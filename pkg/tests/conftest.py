from pathlib import Path

import pytest

from wmmtree.tree import build_tree, parse_edge_table

DATA = Path(__file__).parent / "data"

EXAMPLE_TABLE = """\
from,to,Estimate,Total,Count,Population,Description
Z,A,4,11,NA,FALSE,First child of the root
Z,B,34,70,500,FALSE,Second child of the root
Z,C,1,10,NA,FALSE,Third child of the root
A,D,9,10,50,FALSE,First grandchild
A,E,1,10,NA,FALSE,Second grandchild
"""


@pytest.fixture
def example_table():
    return EXAMPLE_TABLE


@pytest.fixture
def example_tree():
    return build_tree(parse_edge_table(EXAMPLE_TABLE))


@pytest.fixture
def example_csv(tmp_path):
    path = tmp_path / "tree.csv"
    path.write_text(EXAMPLE_TABLE)
    return path


@pytest.fixture
def golden_model():
    return (DATA / "sampleJAGS.mod").read_text()


@pytest.fixture
def single_path_tree():
    # deterministic p = 0.5 to a leaf counting 500
    return build_tree(parse_edge_table(
        "from,to,Estimate,Total,Count,Population\n"
        "Z,A,1,2,500,TRUE\n"
        "Z,B,NA,NA,NA,FALSE\n"
    ))
