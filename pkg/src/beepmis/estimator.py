"""Estimator-style facade: compute an MIS of a graph by simulating a beeping protocol."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .harness import ExperimentConfig, run_trial
from .kernel import MIS, Scenario


def _as_scenario(X, wake=None) -> Scenario:
    if isinstance(X, Scenario):
        return X
    if hasattr(X, "tocoo"):  # scipy sparse
        coo = X.tocoo()
        n = coo.shape[0]
        rows, cols = coo.row, coo.col
        if coo.shape[0] != coo.shape[1]:
            raise ValueError(f"expected a square adjacency matrix, got shape {coo.shape}")
    else:
        A = np.asarray(X)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square adjacency matrix, got shape {A.shape}")
        n = A.shape[0]
        rows, cols = np.nonzero(A)
    keep = rows < cols  # the diagonal drops out here
    lower = rows > cols
    edges = np.concatenate([np.stack([rows[keep], cols[keep]], 1), np.stack([cols[lower], rows[lower]], 1)])
    wake = (0,) * n if wake is None else tuple(int(w) for w in wake)
    if len(wake) != n:
        raise ValueError(f"wake schedule has {len(wake)} entries for {n} nodes")
    return Scenario(n, edges.astype(np.int64), wake, name="graph")


class BeepingMIS(BaseEstimator):
    """Maximal independent set of a graph found by a simulated beeping protocol.

    ``fit`` takes a square adjacency matrix (dense or sparse; self-loops are
    ignored, nonzero entries in either triangle are edges) or a
    :class:`~beepmis.kernel.Scenario`, runs one seeded trial and stores the
    node states at stabilization. ``predict`` returns the boolean MIS mask.
    """

    def __init__(
        self,
        protocol: str = "luby",
        seed: int = 0,
        cap: int | None = None,
        N: int | None = None,
        c: int = 18,
        k0: int | None = None,
        semantics: str = "proof",
    ):
        self.protocol = protocol
        self.seed = seed
        self.cap = cap
        self.N = N
        self.c = c
        self.k0 = k0
        self.semantics = semantics

    def _params(self) -> dict:
        if self.protocol == "fastmis":
            p = {"c": self.c}
            if self.N is not None:
                p["N"] = self.N
            return p
        p = {"semantics": self.semantics}
        if self.k0 is not None:
            p["k0"] = self.k0
        return p

    def fit(self, X, y=None, wake=None):
        if self.protocol not in ("fastmis", "luby", "w1", "w2"):
            raise ValueError(f"protocol {self.protocol!r} does not compute an MIS")
        scenario = _as_scenario(X, wake)
        config = ExperimentConfig(self.protocol, scenario, [self.seed], self._params(), self.cap, resample=False)
        res = run_trial(config, self.seed, scenario=scenario)
        if res.stabilization is None:
            raise RuntimeError(f"no stabilization within {res.rounds} rounds; raise cap")
        self.n_nodes_ = scenario.n
        self.stabilization_round_ = res.stabilization
        self.rounds_ = res.rounds
        self.states_ = res.stable_state
        self.mis_ = res.stable_state == MIS
        self.violations_ = res.violations
        return self

    def predict(self, X=None) -> np.ndarray:
        check_is_fitted(self, "mis_")
        return self.mis_.copy()

    def fit_predict(self, X, y=None, wake=None) -> np.ndarray:
        return self.fit(X, y, wake=wake).predict()
