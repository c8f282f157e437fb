"""The four nonlinear SDR estimators: GSIR, GSAVE, KCCA and KSIR.

Each fit returns a :class:`FittedModel` holding coordinate vectors of the
``d`` leading sufficient-predictor functions.  For GSIR, KCCA and KSIR the
predictor value at a new point x is ``h(x)^T coeffs`` where h is the vector
of kernel sections at the training points; GSAVE works in the
intercept-augmented basis, so it uses ``(1, h(x))^T coeffs`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import (
    KernelSpec,
    as_data_matrix,
    build_gram,
    centering_matrix,
    cross_kernel_matrix,
)
from .linalg import ridge_inv_power, sym_eig

__all__ = [
    "Hyper",
    "FittedModel",
    "fit_gsir",
    "fit_gsave",
    "fit_kcca",
    "fit_ksir",
    "predict",
    "save_model",
    "load_model",
]

KINDS = ("gsir", "gsave", "kcca", "ksir")
GSAVE_EXPONENTS = ("derivation", "printed")


@dataclass(frozen=True)
class Hyper:
    """Hyperparameters shared by all estimators.

    ``gsave_exponent`` selects the power applied to (L_Y L_Y^T + eps*I) in
    GSAVE's conditional-expectation weights: "derivation" uses the full
    inverse, "printed" uses the inverse square root.
    """

    gamma_x: float
    gamma_y: float
    eps_x: float = 0.01
    eps_y: float = 0.001
    d: int = 1
    slices: int = 10
    gsave_exponent: str = "derivation"

    def __post_init__(self) -> None:
        for name in ("gamma_x", "gamma_y", "eps_x", "eps_y"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite real, got {v}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.slices < 2:
            raise ValueError(f"slices must be >= 2, got {self.slices}")
        if self.gsave_exponent not in GSAVE_EXPONENTS:
            raise ValueError(f"unknown gsave_exponent: {self.gsave_exponent!r}")


@dataclass(frozen=True)
class FittedModel:
    kind: str
    hyper: Hyper
    train_x: np.ndarray  # (n, p)
    coeffs: np.ndarray  # (n, d), or (n + 1, d) for gsave
    eigvals: np.ndarray  # (d,) leading eigenvalues, descending

    @property
    def n(self) -> int:
        return self.train_x.shape[0]

    @property
    def p(self) -> int:
        return self.train_x.shape[1]

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]


def _check_xy(x, y, hyper: Hyper) -> tuple[np.ndarray, np.ndarray]:
    x = as_data_matrix(x)
    y = as_data_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
    if hyper.d > x.shape[0]:
        raise ValueError(f"d={hyper.d} exceeds sample size n={x.shape[0]}")
    return x, y


def _contraction(gram: np.ndarray, eps: float, power: float) -> np.ndarray:
    """(G + eps*I)^(-power) G^power via one shared eigendecomposition."""
    e = sym_eig(gram)
    lam = np.clip(e.values, 0.0, None)
    w = (lam / (lam + eps)) ** power
    return (e.vectors * w) @ e.vectors.T


def _gram_eps(eps: float, n: int) -> float:
    """Ridge applied to centered Gram matrices in GSIR and KCCA.

    The nominal values (0.01, 0.001) are calibrated against the benchmark
    tables; on the raw Gram scale they must grow with the sample size or the
    spectral products are effectively unregularized.  sqrt(n) growth keeps
    both the smooth low-frequency links and the oscillatory ones recoverable.
    """
    return eps * float(np.sqrt(n))


# Calibrated side multipliers for the GSAVE ridges (see _sq_gram_eps).
_GSAVE_X_SCALE = 2.5
_GSAVE_Y_SCALE = 50.0


def _sq_gram_eps(eps: float, n: int, scale: float) -> float:
    """Ridge for GSAVE's squared-Gram-scale matrices L_X Q L_X^T and L_Y L_Y^T.

    These products carry an extra factor of n relative to a centered Gram
    matrix, so the nominal ridge grows linearly with the sample size.  The
    side multipliers are calibrated against the benchmark tables: the
    predictor side only whitens L_X Q L_X^T and takes a moderate ridge, while
    on the response side the regularized inverse acts as the bandwidth of
    the conditioning weights, and a much heavier ridge is needed or
    var(f(X) | Y = y) is estimated from too few effective neighbours.
    """
    return eps * scale * n


def _top_eig(m: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    e = sym_eig(0.5 * (m + m.T))
    return e.values[:d].copy(), e.vectors[:, :d].copy()


def fit_gsir(x, y, hyper: Hyper) -> FittedModel:
    """Generalized sliced inverse regression.

    Takes the leading eigenvectors phi of

        (G_X+eI)^{-3/2} G_X^{3/2} (G_Y+eI)^{-1} G_Y^2 (G_Y+eI)^{-1}
            G_X^{3/2} (G_X+eI)^{-3/2}

    and stores coefficient vectors (G_X + eps_x I)^{-1} phi_i.
    """
    x, y = _check_xy(x, y, hyper)
    n = x.shape[0]
    ex, ey = _gram_eps(hyper.eps_x, n), _gram_eps(hyper.eps_y, n)
    gx = build_gram(x, KernelSpec(hyper.gamma_x)).G
    gy = build_gram(y, KernelSpec(hyper.gamma_y)).G
    a = _contraction(gx, ex, 1.5)
    c = _contraction(gy, ey, 1.0)
    m = a @ (c @ c) @ a
    vals, phi = _top_eig(m, hyper.d)
    coeffs = ridge_inv_power(gx, ex, 1.0) @ phi
    return FittedModel("gsir", hyper, x, coeffs, vals)


def fit_kcca(x, y, hyper: Hyper) -> FittedModel:
    """Kernel canonical correlation analysis baseline.

    Eigenvectors of (G_X+eI)^{-1} G_X G_Y (G_Y+eI)^{-2} G_Y G_X (G_X+eI)^{-1},
    with the same coefficient map as GSIR.
    """
    x, y = _check_xy(x, y, hyper)
    n = x.shape[0]
    ex, ey = _gram_eps(hyper.eps_x, n), _gram_eps(hyper.eps_y, n)
    gx = build_gram(x, KernelSpec(hyper.gamma_x)).G
    gy = build_gram(y, KernelSpec(hyper.gamma_y)).G
    a = _contraction(gx, ex, 1.0)
    c = _contraction(gy, ey, 1.0)
    m = a @ (c @ c) @ a
    vals, phi = _top_eig(m, hyper.d)
    coeffs = ridge_inv_power(gx, ex, 1.0) @ phi
    return FittedModel("kcca", hyper, x, coeffs, vals)


def fit_ksir(x, y, hyper: Hyper) -> FittedModel:
    """Kernel sliced inverse regression baseline.

    Responses are partitioned into ``hyper.slices`` equal-count bins; the
    between-slice scatter of centered Gram columns replaces the conditional
    covariance.  Univariate y only.
    """
    x, y = _check_xy(x, y, hyper)
    if y.shape[1] != 1:
        raise ValueError("ksir cannot handle multivariate responses")
    n = x.shape[0]
    if hyper.slices > n:
        raise ValueError(f"slices={hyper.slices} exceeds sample size n={n}")
    gx = build_gram(x, KernelSpec(hyper.gamma_x)).G
    order = np.argsort(y[:, 0], kind="stable")
    m_between = np.zeros((n, n))
    for idx in np.array_split(order, hyper.slices):
        if idx.size == 0:
            raise ValueError("empty slice; reduce the slice count")
        mj = gx[:, idx].mean(axis=1)
        m_between += (idx.size / n) * np.outer(mj, mj)
    rinv = ridge_inv_power(gx, hyper.eps_x, 1.0)
    vals, phi = _top_eig(rinv @ m_between @ rinv, hyper.d)
    coeffs = rinv @ phi
    return FittedModel("ksir", hyper, x, coeffs, vals)


def gsave_weight_matrix(ly: np.ndarray, eps_y: float, exponent: str) -> np.ndarray:
    """C = L_Y^T (L_Y L_Y^T + eps_y I)^(-a) L_Y with a = 1 or 1/2."""
    a = 1.0 if exponent == "derivation" else 0.5
    return ly.T @ ridge_inv_power(ly @ ly.T, eps_y, a) @ ly


def fit_gsave(x, y, hyper: Hyper) -> FittedModel:
    """Generalized sliced average variance estimation.

    Averages the squared deviation of the conditional variance operator from
    the marginal one over the training responses; recovers predictors that
    appear only in var(Y|X), which the first-order methods miss.
    """
    x, y = _check_xy(x, y, hyper)
    n = x.shape[0]
    lx = build_gram(x, KernelSpec(hyper.gamma_x)).L
    ly = build_gram(y, KernelSpec(hyper.gamma_y)).L
    q = centering_matrix(n)
    c = gsave_weight_matrix(
        ly, _sq_gram_eps(hyper.eps_y, n, _GSAVE_Y_SCALE), hyper.gsave_exponent
    )
    w = ridge_inv_power(lx @ q @ lx.T, _sq_gram_eps(hyper.eps_x, n, _GSAVE_X_SCALE), 0.5)
    t = q @ (lx.T @ w)  # (n, n+1)
    qt = t - t.mean(axis=0, keepdims=True)  # Q @ t
    m = np.zeros((n + 1, n + 1))
    for i in range(n):
        ci = c[:, i]
        # Gamma_i t = (Q/n) t - diag(C_i) t + C_i (C_i^T t), no n^3 products
        v = qt / n - ci[:, None] * t + np.outer(ci, ci @ t)
        qv = v - v.mean(axis=0, keepdims=True)  # Q @ v
        m += v.T @ qv
    m /= n
    vals, phi = _top_eig(m, hyper.d)
    coeffs = w @ phi
    return FittedModel("gsave", hyper, x, coeffs, vals)


def predict(model: FittedModel, xnew) -> np.ndarray:
    """Evaluate the d sufficient predictors at each row of xnew."""
    if model.kind not in KINDS:
        raise ValueError(f"unknown model kind: {model.kind!r}")
    h = cross_kernel_matrix(model.train_x, xnew, KernelSpec(model.hyper.gamma_x))
    if model.kind == "gsave":
        h = np.hstack([np.ones((h.shape[0], 1)), h])
    return h @ model.coeffs


FITTERS = {
    "gsir": fit_gsir,
    "gsave": fit_gsave,
    "kcca": fit_kcca,
    "ksir": fit_ksir,
}


# ---------------------------------------------------------------------------
# Model persistence: ASCII header (hyperparameters as round-tripping decimal
# strings) followed by raw little-endian float64 blocks.  Bit-exact round trip.
# ---------------------------------------------------------------------------

_MAGIC = b"NLSDR-MODEL"
_FORMAT_VERSION = 1


def save_model(model: FittedModel, path) -> None:
    h = model.hyper
    header = (
        f"{_MAGIC.decode()} {_FORMAT_VERSION}\n"
        f"kind={model.kind}\n"
        f"n={model.n}\n"
        f"p={model.p}\n"
        f"d={model.d}\n"
        f"coeff_rows={model.coeffs.shape[0]}\n"
        f"gamma_x={h.gamma_x!r}\n"
        f"gamma_y={h.gamma_y!r}\n"
        f"eps_x={h.eps_x!r}\n"
        f"eps_y={h.eps_y!r}\n"
        f"slices={h.slices}\n"
        f"gsave_exponent={h.gsave_exponent}\n"
        f"END\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(model.train_x, dtype="<f8").tobytes(order="C"))
        f.write(np.asfortranarray(model.coeffs.astype("<f8")).tobytes(order="F"))
        f.write(np.ascontiguousarray(model.eigvals, dtype="<f8").tobytes())


def load_model(path) -> FittedModel:
    with open(path, "rb") as f:
        blob = f.read()
    end = blob.find(b"END\n")
    if not blob.startswith(_MAGIC) or end < 0:
        raise ValueError(f"not a model file: {path}")
    lines = blob[:end].decode("ascii").splitlines()
    version = int(lines[0].split()[1])
    if version != _FORMAT_VERSION:
        raise ValueError(
            f"model format version {version} not supported; this build reads version {_FORMAT_VERSION}"
        )
    fields = dict(line.split("=", 1) for line in lines[1:])
    kind = fields["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown model kind in file: {kind!r}")
    n, p, d = int(fields["n"]), int(fields["p"]), int(fields["d"])
    coeff_rows = int(fields["coeff_rows"])
    hyper = Hyper(
        gamma_x=float(fields["gamma_x"]),
        gamma_y=float(fields["gamma_y"]),
        eps_x=float(fields["eps_x"]),
        eps_y=float(fields["eps_y"]),
        d=d,
        slices=int(fields["slices"]),
        gsave_exponent=fields["gsave_exponent"],
    )
    body = blob[end + 4 :]
    need = 8 * (n * p + coeff_rows * d + d)
    if len(body) != need:
        raise ValueError(f"model file truncated: expected {need} payload bytes, got {len(body)}")
    ofs = 0

    def take(count, shape, order="C"):
        nonlocal ofs
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=ofs).astype(float)
        ofs += 8 * count
        return arr.reshape(shape, order=order)

    train_x = take(n * p, (n, p))
    coeffs = take(coeff_rows * d, (coeff_rows, d), order="F")
    eigvals = take(d, (d,))
    return FittedModel(kind, hyper, train_x, coeffs, eigvals)
