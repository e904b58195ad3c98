"""
Runtime settings for the urn chain services.

Values come from the environment; a local `.env` file is honoured.
"""

import logging
import os

import dotenv

dotenv.load_dotenv()


class Settings:
    """
    Reads the tunable limits of the library from environment variables.

    Recognised variables:
    - URNCHAIN_PMF_CELL_CAP: largest exact pmf table (cells) before routing to Monte Carlo
    - URNCHAIN_QUADRATURE_NODES: Gauss nodes per axis for the quadrature oracle
    - URNCHAIN_MC_BLOCK_SIZE: replicates per Monte Carlo block (part of the seed contract)
    - URNCHAIN_LOG_LEVEL: logging level name
    - URNCHAIN_DEFAULT_SEED: seed used when a command is given none
    """

    def __init__(self):
        self.pmf_cell_cap = int(os.getenv("URNCHAIN_PMF_CELL_CAP", "10000000"))
        self.quadrature_nodes = int(os.getenv("URNCHAIN_QUADRATURE_NODES", "200"))
        self.mc_block_size = int(os.getenv("URNCHAIN_MC_BLOCK_SIZE", "100000"))
        self.log_level = os.getenv("URNCHAIN_LOG_LEVEL", "WARNING").upper()
        self.default_seed = int(os.getenv("URNCHAIN_DEFAULT_SEED", "20100101"))

        if self.pmf_cell_cap < 1 or self.quadrature_nodes < 2 or self.mc_block_size < 1:
            raise ValueError(
                "URNCHAIN_PMF_CELL_CAP and URNCHAIN_MC_BLOCK_SIZE must be positive, "
                "URNCHAIN_QUADRATURE_NODES at least 2"
            )


def configure_logging(level: str = None) -> None:
    """Apply the configured log level to the root logger (idempotent)."""
    level = level or Settings().log_level
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
