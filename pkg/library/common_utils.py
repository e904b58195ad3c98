# library/common_utils.py

import csv
import io
from typing import Iterable, Sequence, TextIO


class CsvWriter:
    """
    Shared helper for the byte-stable CSV outputs of the library.
    Every table is written with LF line endings and fixed number formatting.
    """

    def __init__(self, decimals: int = 6):
        self.decimals = decimals

    def fixed(self, value: float) -> str:
        """Format a real with the writer's fixed number of decimals."""
        return f"{value:.{self.decimals}f}"

    @staticmethod
    def significant(value: float) -> str:
        """Format a probability with 17 significant digits (round-trips a float64)."""
        return f"{value:.17g}"

    def write(self, stream: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        """
        Write a header and rows to a text stream.

        Args:
            stream (TextIO): destination, opened with newline="" when it is a file.
            header (Sequence[str]): column names.
            rows (Iterable[Sequence]): already formatted cells.
        """
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    def to_string(self, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        buffer = io.StringIO()
        self.write(buffer, header, rows)
        return buffer.getvalue()
