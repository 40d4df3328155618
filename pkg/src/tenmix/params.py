"""Parameter containers for the tensor mixture model and their JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError
from .tensor import outer_product

PARAMS_FORMAT = "tenmix.model_params"
PARAMS_VERSION = 1


@dataclass
class CpMean:
    """Weighted CP representation of a cluster mean.

    ``weights`` has shape ``(R,)``; ``factors[m]`` has shape ``(d_m, R)`` with
    unit-norm columns.
    """

    weights: np.ndarray
    factors: list

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.factors = [np.asarray(f, dtype=float) for f in self.factors]
        self.factors = [f.reshape(f.shape[0], -1) for f in self.factors]
        for f in self.factors:
            if f.shape[1] != self.weights.size:
                raise ArgumentError(
                    f"factor with {f.shape[1]} columns does not match rank {self.weights.size}"
                )

    @property
    def rank(self):
        return self.weights.size

    @property
    def dims(self):
        return tuple(f.shape[0] for f in self.factors)

    def term(self, r):
        """Unweighted rank-one tensor ``β_{r,0} ∘ ... ∘ β_{r,M-1}``."""
        return outer_product([f[:, r] for f in self.factors])

    def full(self):
        out = np.zeros(self.dims)
        for r in range(self.rank):
            out += self.weights[r] * self.term(r)
        return out

    def copy(self):
        return CpMean(self.weights.copy(), [f.copy() for f in self.factors])

    def canonicalize(self):
        """Apply the sign convention in place and return self.

        Modes ``1..M-1`` get their largest-magnitude entry positive, weights are
        made nonnegative, and mode 0 absorbs every sign flip so the represented
        tensor is unchanged.
        """
        for r in range(self.rank):
            for f in self.factors[1:]:
                col = f[:, r]
                if col[np.argmax(np.abs(col))] < 0:
                    col *= -1
                    self.factors[0][:, r] *= -1
            if self.weights[r] < 0:
                self.weights[r] = -self.weights[r]
                self.factors[0][:, r] *= -1
        return self


@dataclass
class PrecisionSet:
    """Per-mode precision matrices of one cluster.

    Modes ``0..M-2`` satisfy ``||Ω_m||_F = sqrt(d_m)``; the last mode carries
    the free overall scale.
    """

    omegas: list

    def __post_init__(self):
        self.omegas = [np.asarray(o, dtype=float) for o in self.omegas]

    @property
    def dims(self):
        return tuple(o.shape[0] for o in self.omegas)

    def covariances(self):
        return [np.linalg.inv(o) for o in self.omegas]

    def copy(self):
        return PrecisionSet([o.copy() for o in self.omegas])


def normalize_each(omegas):
    """Scale every matrix to Frobenius norm ``sqrt(d_m)``."""
    out = []
    for o in omegas:
        nrm = np.linalg.norm(o)
        if not np.isfinite(nrm) or nrm == 0:
            raise ArgumentError("cannot normalize a zero or non-finite precision matrix")
        out.append(np.sqrt(o.shape[0]) * o / nrm)
    return out


def identifiable(omegas):
    """Rescale a precision list so modes ``< M-1`` have norm ``sqrt(d_m)`` and
    the Kronecker product is unchanged (the scale moves to the last mode)."""
    omegas = [np.asarray(o, dtype=float) for o in omegas]
    scale = 1.0
    out = []
    for o in omegas[:-1]:
        s = np.linalg.norm(o) / np.sqrt(o.shape[0])
        scale *= s
        out.append(o / s)
    out.append(omegas[-1] * scale)
    return out


@dataclass
class ModelParams:
    """Mixture proportions plus per-cluster CP mean and precision set."""

    pis: np.ndarray
    means: list
    precisions: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pis = np.asarray(self.pis, dtype=float).ravel()
        if not (len(self.means) == len(self.precisions) == self.pis.size):
            raise ArgumentError("pis, means and precisions must all have K entries")

    @property
    def K(self):
        return self.pis.size

    @property
    def R(self):
        return self.means[0].rank

    @property
    def dims(self):
        return self.means[0].dims

    def copy(self):
        return ModelParams(
            self.pis.copy(),
            [c.copy() for c in self.means],
            [p.copy() for p in self.precisions],
            dict(self.meta),
        )

    def permuted(self, order):
        """Clusters reordered so new cluster ``j`` is old cluster ``order[j]``."""
        order = list(order)
        return ModelParams(
            self.pis[order],
            [self.means[k].copy() for k in order],
            [self.precisions[k].copy() for k in order],
            dict(self.meta),
        )

    def to_dict(self):
        return {
            "format": PARAMS_FORMAT,
            "version": PARAMS_VERSION,
            "dims": list(self.dims),
            "pis": self.pis.tolist(),
            "clusters": [
                {
                    "weights": cp.weights.tolist(),
                    # factors[r][m] is the unit vector β_{k,r,m}
                    "factors": [[f[:, r].tolist() for f in cp.factors] for r in range(cp.rank)],
                    "precisions": [o.tolist() for o in ps.omegas],
                }
                for cp, ps in zip(self.means, self.precisions)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != PARAMS_FORMAT:
            raise FormatError(f"not a model parameter document: format={doc.get('format')!r}")
        if doc.get("version") != PARAMS_VERSION:
            raise FormatError(f"unsupported model parameter version {doc.get('version')!r}")
        means, precs = [], []
        try:
            for c in doc["clusters"]:
                facs = c["factors"]
                M = len(facs[0])
                factors = [np.array([facs[r][m] for r in range(len(facs))]).T for m in range(M)]
                means.append(CpMean(np.array(c["weights"]), factors))
                precs.append(PrecisionSet([np.array(o) for o in c["precisions"]]))
            return cls(np.array(doc["pis"]), means, precs, dict(doc.get("meta", {})))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed model parameter document: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)


def check_invariants(theta, tau=None, tol=1e-10):
    """List every violated model invariant; an empty list means all hold."""
    bad = []
    if abs(theta.pis.sum() - 1) > 1e-12 or np.any(theta.pis < 0):
        bad.append(f"pis do not form a distribution: {theta.pis}")
    for k, (cp, ps) in enumerate(zip(theta.means, theta.precisions)):
        for m, f in enumerate(cp.factors):
            norms = np.linalg.norm(f, axis=0)
            if np.any(np.abs(norms - 1) > tol):
                bad.append(f"cluster {k} mode {m}: factor norms {norms}")
        if np.any(cp.weights < 0):
            bad.append(f"cluster {k}: negative weight {cp.weights}")
        for m, o in enumerate(ps.omegas):
            if m < len(ps.omegas) - 1:
                r = np.linalg.norm(o) / np.sqrt(o.shape[0])
                if abs(r - 1) > tol:
                    bad.append(f"cluster {k} mode {m}: ||Omega||_F/sqrt(d) = {r}")
            if np.abs(o - o.T).max() > tol * max(1.0, np.abs(o).max()):
                bad.append(f"cluster {k} mode {m}: precision not symmetric")
            try:
                np.linalg.cholesky(o)
            except np.linalg.LinAlgError:
                bad.append(f"cluster {k} mode {m}: precision not positive definite")
    if tau is not None:
        tau = np.asarray(tau)
        if np.abs(tau.sum(axis=1) - 1).max() > 1e-12:
            bad.append("responsibility rows do not sum to 1")
        if tau.min() < 0 or tau.max() > 1:
            bad.append("responsibilities outside [0, 1]")
    return bad
