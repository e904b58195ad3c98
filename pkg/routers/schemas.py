from typing import List

from pydantic import BaseModel, Field

from library.polya_urn import BetaParams


class BetaBody(BaseModel):
    """Shape pair of a Beta law.

    Attributes:
        alpha (float): first shape, > 0.
        beta (float): second shape, > 0.
    """
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)

    def to_params(self) -> BetaParams:
        return BetaParams(self.alpha, self.beta)


class PmfCell(BaseModel):
    counts: List[int]
    prob: float


def to_priors(bodies: List[BetaBody]) -> List[BetaParams]:
    return [b.to_params() for b in bodies]


def table_cells(table) -> List[PmfCell]:
    return [PmfCell(counts=list(index), prob=p) for index, p in table.cells()]
