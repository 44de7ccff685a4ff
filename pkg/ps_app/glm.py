"""
Regresión logística binaria (IRLS) con inferencia de Wald, codificación del
diseño, VIF y las tres especificaciones de modelo del estudio.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy import linalg, stats
from scipy.special import expit

from .participation import SUSTAINED, NOT_SUSTAINED

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"
BETA_LIMIT = 20.0
COLLINEAR_R2 = 1.0 - 1e-12


class DesignError(ValueError):
    pass


class PerfectSeparationError(ValueError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class RankDeficiencyError(ValueError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


# ==========================
# Especificación y diseño
# ==========================
@dataclass(frozen=True)
class ModelSpec:
    name: str
    outcome: str
    predictors: tuple
    categorical_levels: dict = field(default_factory=dict)
    transforms: dict = field(default_factory=dict)

    @property
    def variables(self):
        return (self.outcome, *self.predictors)

    def without(self, names):
        names = set(names)
        return replace(self, predictors=tuple(p for p in self.predictors if p not in names))

    def with_transforms(self, transforms):
        aplicables = {k: v for k, v in transforms.items() if k in self.predictors}
        return replace(self, transforms={**self.transforms, **aplicables})

    def to_dict(self):
        return {
            "name": self.name,
            "outcome": self.outcome,
            "predictors": list(self.predictors),
            "categorical_levels": {k: list(v) for k, v in self.categorical_levels.items()},
            "transforms": dict(self.transforms),
        }


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    columns: tuple
    dropped_rows: int = 0
    warnings: tuple = ()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def encode_design(frame, spec):
    """Intercepto + dummies (sin nivel de referencia) + columnas continuas."""
    faltan = [v for v in spec.variables if v not in frame.columns]
    if faltan:
        raise DesignError(f"Variables ausentes en el marco de datos: {', '.join(faltan)}")

    sub = frame[list(spec.variables)]
    completas = sub.notna().all(axis=1)
    dropped = int((~completas).sum())
    sub = sub[completas]
    if sub.empty:
        raise DesignError(f"{spec.name}: no quedan filas completas.")

    y = sub[spec.outcome].astype(float).to_numpy()
    if not np.isin(y, (0.0, 1.0)).all():
        raise DesignError(f"La variable respuesta '{spec.outcome}' debe ser 0/1.")

    avisos = []
    columnas = [np.ones(len(sub))]
    nombres = [INTERCEPT]
    for var in spec.predictors:
        if var in spec.categorical_levels:
            levels = tuple(spec.categorical_levels[var])
            valores = sub[var].astype(str)
            presentes = set(valores)
            desconocidos = presentes - set(levels)
            if desconocidos:
                raise DesignError(f"Niveles desconocidos en '{var}': {sorted(desconocidos)}")
            observados = [l for l in levels if l in presentes]
            if len(observados) < 2:
                raise DesignError(f"Predictor constante: '{var}'")
            if observados[0] != levels[0]:
                aviso = f"'{var}': nivel de referencia '{levels[0]}' sin observaciones, se usa '{observados[0]}'"
                logger.warning(aviso)
                avisos.append(aviso)
            for level in observados[1:]:
                columnas.append((valores == level).to_numpy(dtype=float))
                nombres.append(f"{var} ({level})")
        else:
            col = sub[var].astype(float).to_numpy()
            if np.ptp(col) == 0:
                raise DesignError(f"Predictor constante: '{var}'")
            columnas.append(col)
            nombres.append(var)

    if dropped:
        avisos.append(f"{dropped} filas con valores ausentes descartadas")
    return DesignMatrix(
        X=np.column_stack(columnas),
        y=y,
        columns=tuple(nombres),
        dropped_rows=dropped,
        warnings=tuple(avisos),
    )


# ==========================
# Verosimilitud
# ==========================
def log_likelihood(beta, X, y):
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def score(beta, X, y):
    """Gradiente de la log-verosimilitud: X'(y - p)."""
    return X.T @ (y - expit(X @ beta))


def fisher_information(beta, X):
    mu = expit(X @ beta)
    w = mu * (1.0 - mu)
    return X.T @ (X * w[:, None])


def _null_space_columns(X, columns, rank):
    _, _, vt = linalg.svd(X, full_matrices=True)
    nulos = vt[rank:]
    implicadas = np.any(np.abs(nulos) > 1e-8, axis=0)
    return [c for c, flag in zip(columns, implicadas) if flag]


# ==========================
# Ajuste
# ==========================
@dataclass(frozen=True)
class ModelFit:
    name: str
    outcome: str
    columns: tuple
    coefficients: tuple
    standard_errors: tuple
    z_values: tuple
    p_values: tuple
    odds_ratios: tuple
    log_likelihood: float
    deviance: float
    aic: float
    bic: float
    n_obs: int
    iterations: int
    converged: bool
    covariance: tuple
    dropped_rows: int = 0
    warnings: tuple = ()

    @property
    def n_params(self):
        return len(self.columns)

    def coefficient(self, column):
        return self.coefficients[self.columns.index(column)]

    def to_dict(self):
        return {
            "name": self.name,
            "outcome": self.outcome,
            "columns": list(self.columns),
            "coefficients": list(self.coefficients),
            "standard_errors": list(self.standard_errors),
            "z_values": list(self.z_values),
            "p_values": list(self.p_values),
            "odds_ratios": list(self.odds_ratios),
            "log_likelihood": self.log_likelihood,
            "deviance": self.deviance,
            "aic": self.aic,
            "bic": self.bic,
            "n_obs": self.n_obs,
            "iterations": self.iterations,
            "converged": self.converged,
            "covariance": [list(row) for row in self.covariance],
            "dropped_rows": self.dropped_rows,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data):
        tuplas = ("columns", "coefficients", "standard_errors", "z_values", "p_values", "odds_ratios", "warnings")
        kwargs = {k: tuple(v) if k in tuplas else v for k, v in data.items()}
        kwargs["covariance"] = tuple(tuple(row) for row in data["covariance"])
        return cls(**kwargs)


def _newton_step(beta, X, y, columns):
    info = fisher_information(beta, X)
    grad = score(beta, X, y)
    try:
        return linalg.solve(info, grad, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        col = columns[int(np.argmax(np.abs(beta)))]
        raise PerfectSeparationError(
            f"Información de Fisher singular: separación completa en '{col}'", column=col,
        )


def fit_logistic(design, tol=1e-8, max_iter=100, name="model", outcome="y"):
    X, y, columns = design.X, design.y, design.columns
    n, p = X.shape
    if n <= p:
        raise DesignError(f"Se necesitan más filas ({n}) que parámetros ({p}).")

    rank = np.linalg.matrix_rank(X)
    if rank < p:
        implicadas = _null_space_columns(X, columns, rank)
        raise RankDeficiencyError(
            f"Matriz de diseño de rango {rank} < {p}; columnas en el espacio nulo: {', '.join(implicadas)}",
            columns=implicadas,
        )

    beta = np.zeros(p)
    ll = log_likelihood(beta, X, y)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        step = _newton_step(beta, X, y, columns)

        # paso a la mitad mientras la verosimilitud empeore
        t = 1.0
        while True:
            candidato = beta + t * step
            nuevo = log_likelihood(candidato, X, y)
            if np.isfinite(nuevo) and nuevo >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            t /= 2.0
            if t < 1e-10:
                break
        beta = candidato

        if not np.all(np.isfinite(beta)) or np.any(np.abs(beta) > BETA_LIMIT):
            col = columns[int(np.nanargmax(np.abs(beta)))]
            raise PerfectSeparationError(
                f"|beta| > {BETA_LIMIT:g} en '{col}': separación completa", column=col,
            )

        delta = abs(nuevo - ll)
        ll = nuevo
        if delta < tol:
            converged = True
            break

    if not converged:
        col = columns[int(np.argmax(np.abs(beta)))]
        raise PerfectSeparationError(
            f"Sin convergencia en {max_iter} iteraciones (columna '{col}')", column=col,
        )

    # un paso de Newton más para pulir los coeficientes
    beta = beta + _newton_step(beta, X, y, columns)
    ll = log_likelihood(beta, X, y)

    cov = linalg.inv(fisher_information(beta, X), check_finite=True)
    cov = (cov + cov.T) / 2.0
    se = np.sqrt(np.diag(cov))
    z = beta / se
    pvals = 2.0 * stats.norm.sf(np.abs(z))

    return ModelFit(
        name=name,
        outcome=outcome,
        columns=tuple(columns),
        coefficients=tuple(float(b) for b in beta),
        standard_errors=tuple(float(s) for s in se),
        z_values=tuple(float(v) for v in z),
        p_values=tuple(float(v) for v in pvals),
        odds_ratios=tuple(float(v) for v in np.exp(beta)),
        log_likelihood=ll,
        deviance=-2.0 * ll,
        aic=2.0 * p - 2.0 * ll,
        bic=p * np.log(n) - 2.0 * ll,
        n_obs=n,
        iterations=iteration,
        converged=True,
        covariance=tuple(tuple(float(v) for v in row) for row in cov),
        dropped_rows=design.dropped_rows,
        warnings=design.warnings,
    )


def fit_model(frame, spec, tol=1e-8, max_iter=100):
    design = encode_design(frame, spec)
    return fit_logistic(design, tol=tol, max_iter=max_iter, name=spec.name, outcome=spec.outcome)


# ==========================
# Odds ratios
# ==========================
def significance_marker(p_value):
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


def odds_ratios(fit):
    return [
        {"column": col, "odds_ratio": float(np.exp(b)), "marker": significance_marker(pv)}
        for col, b, pv in zip(fit.columns, fit.coefficients, fit.p_values)
    ]


# ==========================
# VIF
# ==========================
def vif(design):
    """VIF_j = 1/(1 - R2_j) de cada columna (sin intercepto) contra las demás."""
    idx = [i for i, c in enumerate(design.columns) if c != INTERCEPT]
    if len(idx) < 2:
        raise DesignError("El VIF necesita al menos dos columnas además del intercepto.")
    X = design.X
    ones = np.ones((X.shape[0], 1))
    resultado = {}
    for j in idx:
        target = X[:, j]
        otras = np.hstack([ones, X[:, [i for i in idx if i != j]]])
        coef, *_ = np.linalg.lstsq(otras, target, rcond=None)
        resid = target - otras @ coef
        ss_tot = float(np.sum((target - target.mean()) ** 2))
        # R2 >= 0 con intercepto; el redondeo no debe dar VIF < 1
        r2 = max(0.0, 1.0 - float(resid @ resid) / ss_tot) if ss_tot > 0 else 1.0
        resultado[design.columns[j]] = float("inf") if r2 >= COLLINEAR_R2 else 1.0 / (1.0 - r2)
    return resultado


def vif_gate(vifs, limit=5.0):
    """(todas por debajo del límite, columnas que lo superan)."""
    fuera = [c for c, v in vifs.items() if not v < limit]
    return not fuera, fuera


# ==========================
# Modelos del estudio
# ==========================
REPO_SIZE_LEVELS = ("small", "medium", "large")

CONTROLS = (
    "core_member",
    "contrib_rate_author",
    "followers",
    "num_languages",
    "contrib_follow_integrator",
    "social_strength",
    "repo_size",
)

CONTINUOUS_CONTROLS = ("followers", "watchers", "num_languages", "contrib_rate_author", "social_strength")
BINARY_CONTROLS = ("core_member", "contrib_follow_integrator")

MODEL_SPECS = {
    1: ModelSpec(
        name="Model 1",
        outcome="sustainedp_or_not_12",
        predictors=("PS_index_repository", *CONTROLS),
        categorical_levels={"repo_size": REPO_SIZE_LEVELS},
    ),
    2: ModelSpec(
        name="Model 2",
        outcome="recent_sustainedp_or_not",
        predictors=("PS_index_repository", *CONTROLS),
        categorical_levels={"repo_size": REPO_SIZE_LEVELS},
    ),
    3: ModelSpec(
        name="Model 3",
        outcome="recent_sustainedp_or_not",
        predictors=("sustainedp_or_not_12", "PS_index_repository", *CONTROLS),
        categorical_levels={"repo_size": REPO_SIZE_LEVELS},
    ),
}

FRAME_COLUMNS = (
    "repo_full_name", "pr_number", "author",
    "sustainedp_or_not_12", "recent_sustainedp_or_not", "PS_index_repository",
    "core_member", "contrib_rate_author", "followers", "num_languages",
    "contrib_follow_integrator", "social_strength", "repo_size", "watchers",
)


def build_model_frame(corpus, labels, repository_index, unit="pr"):
    """
    Filas por PR (por defecto) o por contribuidor, solo de contribuidores
    sostenidos/no sostenidos, con el índice PS del repositorio adjunto.
    Los controles ausentes quedan como NA y encode_design los descarta.
    """
    if unit not in ("pr", "contributor"):
        raise DesignError(f"Unidad desconocida: {unit!r}")
    contexts = {c.key: c for c in corpus.contexts}
    repos = {r.repo_full_name: r for r in corpus.repos}

    if unit == "pr":
        claves = [(pr.repo_full_name, pr.author, pr.pr_number) for pr in corpus.pulls]
    else:
        claves = [(repo, author, None) for repo, author in corpus.contributors()]

    filas = []
    for repo, author, number in claves:
        label = labels.get((repo, author))
        if label is None or label.status not in (SUSTAINED, NOT_SUSTAINED):
            continue
        ctx = contexts.get((repo, author))
        meta = repos.get(repo)
        filas.append((
            repo, number, author,
            label.sustainedp_or_not_12, label.recent_sustainedp_or_not,
            repository_index.get(repo),
            None if ctx is None else int(ctx.core_member),
            None if ctx is None else ctx.contrib_rate_author,
            None if ctx is None else ctx.followers,
            None if ctx is None else ctx.num_languages,
            None if ctx is None else int(ctx.contrib_follow_integrator),
            None if ctx is None else ctx.social_strength,
            None if meta is None else meta.repo_size,
            None if meta is None else meta.stars,
        ))

    frame = pd.DataFrame(filas, columns=list(FRAME_COLUMNS))
    numericas = [c for c in FRAME_COLUMNS if c not in ("repo_full_name", "author", "repo_size", "pr_number")]
    frame[numericas] = frame[numericas].astype(float)
    return frame
