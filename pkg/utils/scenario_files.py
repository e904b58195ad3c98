"""
Readers for scenario config files and default schedule CSVs.
"""

import csv
import io
from pathlib import Path
from typing import Dict, List, Tuple

from pydantic import ValidationError

from library.errors import InputParseError
from library.simulation import DefaultSchedule, ScenarioConfig

GLOBAL_KEYS = {"monthly_slope": float, "months": int}
GROUP_KEYS = {"size": int, "one_year_spread": float, "reinforcement": float}


class ScenarioFileParser:
    """
    Parses the line-oriented scenario format and schedule CSVs.

    Config format:
        # comment
        monthly_slope = 0.0005
        months = 12

        [group.A]
        size = 20
        one_year_spread = 0.02
        reinforcement = 0.05

    Groups are ordered best to worst by order of appearance. Every error
    carries the file name and line number.
    """

    def parse_config(self, text: str, source: str = "<config>") -> ScenarioConfig:
        """
        Parse config text into a ScenarioConfig.

        Raises:
            InputParseError: malformed line, unknown or repeated key, bad value,
                missing group key, or a value outside its allowed range.
        """
        values: Dict[str, object] = {}
        groups: List[Dict[str, object]] = []
        lines: Dict[Tuple, int] = {}
        current = None

        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not (line.endswith("]") and line[1:-1].startswith("group.") and len(line) > len("[group.]")):
                    raise InputParseError(f"expected a '[group.<name>]' section, got '{line}'", source, lineno)
                current = {"name": line[len("[group."):-1].strip()}
                groups.append(current)
                lines[("groups", len(groups) - 1)] = lineno
                continue
            if "=" not in line:
                raise InputParseError(f"expected 'key = value', got '{line}'", source, lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            allowed = GLOBAL_KEYS if current is None else GROUP_KEYS
            if key not in allowed:
                scope = "global" if current is None else f"group '{current['name']}'"
                raise InputParseError(
                    f"unknown {scope} key '{key}'; expected one of {sorted(allowed)}", source, lineno
                )
            target = values if current is None else current
            if key in target:
                raise InputParseError(f"key '{key}' given twice", source, lineno)
            try:
                target[key] = allowed[key](value)
            except ValueError:
                raise InputParseError(
                    f"'{key}' expects {allowed[key].__name__}, got '{value}'", source, lineno
                ) from None
            if current is None:
                lines[(key,)] = lineno
            else:
                lines[("groups", len(groups) - 1, key)] = lineno

        for index, group in enumerate(groups):
            missing = sorted(set(GROUP_KEYS) - set(group))
            if missing:
                raise InputParseError(
                    f"group '{group['name']}' is missing {', '.join(missing)}", source, lines[("groups", index)]
                )

        try:
            return ScenarioConfig(groups=groups, **values)
        except ValidationError as exc:
            first = exc.errors()[0]
            loc = tuple(first["loc"])
            line = lines.get(loc) or lines.get(loc[:2])
            where = ".".join(str(p) for p in loc) or "config"
            raise InputParseError(f"{where}: {first['msg']}", source, line) from None

    def parse_schedule(self, text: str, source: str = "<schedule>") -> DefaultSchedule:
        """
        Parse a schedule CSV with header `month,<group names...>` and one row
        per month 1..T of nonnegative integer counts.

        Raises:
            InputParseError: missing header, wrong month sequence, bad cells.
        """
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if not header or header[0].strip() != "month" or len(header) < 2:
            raise InputParseError("header must be 'month,<group names...>'", source, 1)
        names = [h.strip() for h in header[1:]]
        if len(set(names)) != len(names) or any(not n for n in names):
            raise InputParseError(f"group columns must be unique and non-empty, got {names}", source, 1)

        counts = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputParseError(f"expected {len(header)} cells, got {len(row)}", source, lineno)
            try:
                cells = [int(cell) for cell in row]
            except ValueError:
                raise InputParseError(f"cells must be integers, got {row}", source, lineno) from None
            if cells[0] != len(counts) + 1:
                raise InputParseError(f"expected month {len(counts) + 1}, got {cells[0]}", source, lineno)
            if any(c < 0 for c in cells[1:]):
                raise InputParseError(f"default counts must be nonnegative, got {cells[1:]}", source, lineno)
            counts.append(cells[1:])

        return DefaultSchedule(tuple(names), counts)

    def load_config(self, path) -> ScenarioConfig:
        path = Path(path)
        return self.parse_config(self._read(path), str(path))

    def load_schedule(self, path) -> DefaultSchedule:
        path = Path(path)
        return self.parse_schedule(self._read(path), str(path))

    @staticmethod
    def _read(path: Path) -> str:
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputParseError(f"cannot read file: {exc.strerror}", str(path)) from None
