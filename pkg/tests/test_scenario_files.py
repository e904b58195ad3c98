from pathlib import Path

import pytest

from library.errors import InputParseError
from utils.scenario_files import ScenarioFileParser

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

GOOD = """\
# two groups
monthly_slope = 0.001
months = 6

[group.Prime]
size = 10
one_year_spread = 0.01
reinforcement = 0.02

[group.Sub]
size = 30   # inline comment
one_year_spread = 0.05
reinforcement = 0.02
"""


@pytest.fixture
def parser():
    return ScenarioFileParser()


def test_parse_config(parser):
    config = parser.parse_config(GOOD, "good.conf")
    assert config.group_names() == ["Prime", "Sub"]
    assert config.monthly_slope == 0.001
    assert config.months == 6
    assert config.groups[1].size == 30


def test_bundled_scenario(parser):
    config = parser.load_config(SCENARIOS / "three_groups.conf")
    assert [(g.name, g.size) for g in config.groups] == [("A", 20), ("B", 90), ("C", 180)]
    schedule = parser.load_schedule(SCENARIOS / "three_groups_schedule.csv")
    assert schedule.months == 12
    assert list(schedule.column("C")[:3]) == [25, 19, 9]


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("months = 12\ncolour = red\n", 2, "unknown global key"),
        ("[group.A]\nsize = 2\nsize = 3\n", 3, "given twice"),
        ("[group.A]\nsize = two\n", 2, "expects int"),
        ("[grp.A]\n", 1, "section"),
        ("months\n", 1, "key = value"),
        ("[group.A]\nsize = 2\none_year_spread = 0.01\n", 1, "missing reinforcement"),
        ("[group.A]\nsize = 0\none_year_spread = 0.01\nreinforcement = 0.1\n", 2, "size"),
    ],
)
def test_config_errors_carry_line_numbers(parser, text, line, fragment):
    with pytest.raises(InputParseError) as excinfo:
        parser.parse_config(text, "bad.conf")
    assert excinfo.value.line == line
    assert str(excinfo.value).startswith(f"bad.conf:{line}: ")
    assert fragment in str(excinfo.value)


def test_config_without_groups(parser):
    with pytest.raises(InputParseError):
        parser.parse_config("months = 3\n", "empty.conf")


def test_parse_schedule(parser):
    schedule = parser.parse_schedule("month,A,B\n1,0,2\n2,1,0\n")
    assert schedule.group_names == ("A", "B")
    assert schedule.counts.tolist() == [[0, 2], [1, 0]]


def test_parse_empty_schedule(parser):
    schedule = parser.parse_schedule("month,A,B\n")
    assert schedule.months == 0


@pytest.mark.parametrize(
    "text, line",
    [
        ("group,A\n1,0\n", 1),
        ("month,A\n2,0\n", 2),
        ("month,A\n1,-1\n", 2),
        ("month,A\n1,x\n", 2),
        ("month,A,B\n1,0\n", 2),
    ],
)
def test_schedule_errors_carry_line_numbers(parser, text, line):
    with pytest.raises(InputParseError) as excinfo:
        parser.parse_schedule(text, "s.csv")
    assert excinfo.value.line == line


def test_missing_file(parser, tmp_path):
    with pytest.raises(InputParseError):
        parser.load_config(tmp_path / "nope.conf")
