"""
Cribado de predictores: asimetría muestral, log1p y exclusión de binarias desbalanceadas.
"""
import logging
from dataclasses import dataclass, asdict

import numpy as np
import pandas as pd
from django.core.exceptions import ImproperlyConfigured

from .utils import clean_float

logger = logging.getLogger(__name__)

BINARY = "binary"
CONTINUOUS = "continuous"
KINDS = (BINARY, CONTINUOUS)

RETAINED = "retained"
TRANSFORMED = "transformed+retained"
EXCLUDED = "excluded"
# muy pocas observaciones para decidir: se conserva sin transformar
UNSCREENED = "unscreened"


class UndefinedSkewnessError(ValueError):
    """Varianza cero: la asimetría no está definida."""


class SampleSizeError(ValueError):
    pass


class DomainError(ValueError):
    pass


# ==========================
# Estadísticos
# ==========================
def skewness(values, type=3):
    """
    Asimetría muestral con momentos centrales m_k = (1/n) sum (x - media)^k.
      type 1: g1 = m3 / m2^(3/2)
      type 2: g1 * sqrt(n(n-1)) / (n-2)
      type 3: g1 * ((n-1)/n)^(3/2)
    """
    if type not in (1, 2, 3):
        raise ValueError(f"Tipo de asimetría desconocido: {type}")
    x = np.asarray(values, dtype=float)
    n = x.size
    minimo = 3 if type in (2, 3) else 1
    if n < minimo:
        raise SampleSizeError(f"Se necesitan al menos {minimo} valores (hay {n}).")
    if np.ptp(x) == 0:
        raise UndefinedSkewnessError("Varianza cero: asimetría indefinida.")

    dev = x - x.mean()
    m2 = np.mean(dev ** 2)
    m3 = np.mean(dev ** 3)
    g1 = m3 / m2 ** 1.5
    if type == 1:
        return float(g1)
    if type == 2:
        return float(g1 * np.sqrt(n * (n - 1)) / (n - 2))
    return float(g1 * ((n - 1) / n) ** 1.5)


def log1p_transform(values):
    x = np.asarray(values, dtype=float)
    if np.any(x < 0):
        raise DomainError("log1p solo admite valores no negativos.")
    return np.log1p(x)


def minority_fraction(values):
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise SampleSizeError("Columna binaria vacía.")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("Una variable binaria solo admite 0 y 1.")
    p = x.mean()
    return float(min(p, 1.0 - p))


# ==========================
# Cribado
# ==========================
@dataclass(frozen=True)
class ScreeningConfig:
    skew_threshold: float = 3.0
    minority_threshold: float = 0.05
    skew_type: int = 3

    def __post_init__(self):
        if self.skew_threshold <= 0:
            raise ImproperlyConfigured("skew_threshold debe ser > 0.")
        if not 0 <= self.minority_threshold < 0.5:
            raise ImproperlyConfigured("minority_threshold debe estar en [0, 0.5).")
        if self.skew_type not in (1, 2, 3):
            raise ImproperlyConfigured("skew_type debe ser 1, 2 o 3.")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class VariableScreening:
    name: str
    kind: str
    decision: str
    reason: str = ""
    raw_skewness: float | None = None
    transformed_skewness: float | None = None
    minority_fraction: float | None = None

    @property
    def retained(self):
        return self.decision != EXCLUDED

    @property
    def transformed(self):
        return self.decision == TRANSFORMED

    def to_dict(self):
        data = asdict(self)
        for key in ("raw_skewness", "transformed_skewness", "minority_fraction"):
            data[key] = clean_float(data[key])
        return data


@dataclass(frozen=True)
class ScreeningReport:
    config: ScreeningConfig
    variables: tuple  # VariableScreening, ordenadas por nombre

    def __getitem__(self, name):
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def __contains__(self, name):
        return any(v.name == name for v in self.variables)

    @property
    def retained(self):
        return [v.name for v in self.variables if v.retained]

    @property
    def transformed(self):
        return [v.name for v in self.variables if v.transformed]

    @property
    def excluded(self):
        return [v.name for v in self.variables if not v.retained]

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "variables": [v.to_dict() for v in self.variables],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            config=ScreeningConfig(**data["config"]),
            variables=tuple(VariableScreening(**v) for v in data["variables"]),
        )

    def apply(self, frame):
        """Copia del DataFrame con log1p aplicado y las excluidas eliminadas."""
        frame = frame.copy()
        for v in self.variables:
            if v.name not in frame.columns:
                continue
            if not v.retained:
                frame = frame.drop(columns=[v.name])
            elif v.transformed:
                frame[v.name] = log1p_transform(frame[v.name].to_numpy())
        return frame

    def render(self):
        def fmt(x):
            return "-" if x is None else f"{x:.3f}"

        lineas = [
            f"{'variable':<28}{'tipo':<12}{'asimetría':>10}{'log1p':>10}{'minoría':>10}  decisión",
        ]
        for v in self.variables:
            lineas.append(
                f"{v.name:<28}{v.kind:<12}{fmt(v.raw_skewness):>10}{fmt(v.transformed_skewness):>10}"
                f"{fmt(v.minority_fraction):>10}  {v.decision}" + (f" ({v.reason})" if v.reason else "")
            )
        return "\n".join(lineas)


def _screen_continuous(name, values, config):
    try:
        raw = skewness(values, config.skew_type)
    except SampleSizeError as e:
        return VariableScreening(name, CONTINUOUS, UNSCREENED, str(e))
    except UndefinedSkewnessError:
        return VariableScreening(name, CONTINUOUS, EXCLUDED, "constant")
    if abs(raw) <= config.skew_threshold:
        return VariableScreening(name, CONTINUOUS, RETAINED, raw_skewness=raw)

    try:
        transformed = skewness(log1p_transform(values), config.skew_type)
    except DomainError as e:
        return VariableScreening(name, CONTINUOUS, EXCLUDED, str(e), raw_skewness=raw)
    if abs(transformed) > config.skew_threshold:
        return VariableScreening(
            name, CONTINUOUS, EXCLUDED,
            f"skewed after log1p (|{transformed:.2f}| > {config.skew_threshold})",
            raw_skewness=raw, transformed_skewness=transformed,
        )
    return VariableScreening(
        name, CONTINUOUS, TRANSFORMED, "log1p",
        raw_skewness=raw, transformed_skewness=transformed,
    )


def _screen_binary(name, values, config):
    try:
        fraction = minority_fraction(values)
    except SampleSizeError as e:
        return VariableScreening(name, BINARY, UNSCREENED, str(e))
    if fraction < config.minority_threshold:
        return VariableScreening(
            name, BINARY, EXCLUDED, "imbalanced", minority_fraction=fraction,
        )
    return VariableScreening(name, BINARY, RETAINED, minority_fraction=fraction)


def screen_predictors(table, kinds, config=None):
    """
    table: nombre -> valores (dict o DataFrame); kinds: nombre -> binary|continuous.
    Cada variable de la tabla aparece exactamente una vez en el informe.
    """
    config = config or ScreeningConfig()
    nombres = sorted(table.keys())
    resultados = []
    for name in nombres:
        kind = kinds.get(name)
        if kind not in KINDS:
            raise ImproperlyConfigured(f"Tipo de variable desconocido para '{name}': {kind!r}")
        values = table[name]
        if isinstance(values, pd.Series):
            values = values.to_numpy()
        if kind == CONTINUOUS:
            resultado = _screen_continuous(name, values, config)
        else:
            resultado = _screen_binary(name, values, config)
        if not resultado.retained:
            logger.info(f"Variable '{name}' excluida: {resultado.reason}")
        elif resultado.decision == UNSCREENED:
            logger.warning(f"Variable '{name}' sin cribar: {resultado.reason}")
        resultados.append(resultado)
    return ScreeningReport(config=config, variables=tuple(resultados))
