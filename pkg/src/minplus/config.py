"""Runtime knobs for the solvers and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

ENGINES = ("det", "naive", "det-reference")
COL_ENGINES = ("auto", "verification", "twopointer")
Y_METHODS = ("counting", "ring")


@dataclass(frozen=True)
class SolverConfig:
    """Options threaded through the product and convolution drivers.

    engine selects the candidate-verification backend: "det" is the batched
    deterministic kernel, "naive" the brute-force product, "det-reference"
    the literal one-instance-at-a-time verification loop (small inputs only).
    M and R override the promise modulus and the prime-pool range. slack
    scales the good-modulus audit. fast_shared_modulus lets det-reference
    reuse one Q across the (s, t) instances of a recursion level instead of
    searching per instance.
    """

    engine: str = "det"
    M: int | None = None
    R: int | None = None
    omega_exponent: float = 3.0
    slack: float | None = None
    fast_shared_modulus: bool = True
    oracle_limit: int = 1 << 22
    test_mode: bool = False
    col_engine: str = "auto"
    y_method: str = "counting"
    numeric_backend: str = "schoolbook"

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.col_engine not in COL_ENGINES:
            raise ValueError(f"col_engine must be one of {COL_ENGINES}")
        if self.y_method not in Y_METHODS:
            raise ValueError(f"y_method must be one of {Y_METHODS}")
        if self.M is not None and (self.M <= 0 or self.M % 100):
            raise ValueError("M override must be a positive multiple of 100")
