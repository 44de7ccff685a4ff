"""
Tablas del estudio: PRs por repositorio, estadísticos descriptivos de los cues,
índice PS por repositorio y tabla de modelos (β(SE) con estrellas, OR, criterios).
"""
import logging
from pathlib import Path

import pandas as pd

from .diagnostics import BINARY
from .glm import INTERCEPT, significance_marker

logger = logging.getLogger(__name__)

# Orden de filas de la tabla de modelos; otros términos van al final
TERM_ORDER = (
    INTERCEPT,
    "sustainedp_or_not_12",
    "PS_index_repository",
    "core_member",
    "contrib_rate_author",
    "followers",
    "num_languages",
    "contrib_follow_integrator",
    "social_strength",
    "repo_size (medium)",
    "repo_size (large)",
)

CRITERIA = (
    ("AIC", "aic"),
    ("BIC", "bic"),
    ("Log Likelihood", "log_likelihood"),
    ("Deviance", "deviance"),
    ("Num. obs.", "n_obs"),
)


def format_index(value):
    return f"{value:.3f}"


def format_cell(beta, se, p_value):
    return f"{beta:.2f}({se:.2f}){significance_marker(p_value)}"


def format_odds_ratio(value):
    if value < 10:
        return f"{value:.2f}"
    if value < 100:
        return f"{value:.1f}"
    return f"{value:.0f}"


def _terms(fits):
    vistos = []
    for fit in fits:
        for col in fit.columns:
            if col not in vistos:
                vistos.append(col)
    ordenados = [t for t in TERM_ORDER if t in vistos]
    return ordenados + [t for t in vistos if t not in TERM_ORDER]


def models_table(fits):
    """DataFrame con una fila por término y dos columnas (β(SE), OR) por modelo."""
    fits = list(fits)
    columnas = ["term"]
    for fit in fits:
        columnas += [f"{fit.name} beta(SE)", f"{fit.name} OR"]

    filas = []
    for term in _terms(fits):
        fila = [term]
        for fit in fits:
            if term in fit.columns:
                i = fit.columns.index(term)
                fila += [
                    format_cell(fit.coefficients[i], fit.standard_errors[i], fit.p_values[i]),
                    format_odds_ratio(fit.odds_ratios[i]),
                ]
            else:
                fila += ["", ""]
        filas.append(fila)

    for etiqueta, atributo in CRITERIA:
        fila = [etiqueta]
        for fit in fits:
            fila += [f"{getattr(fit, atributo):.0f}", ""]
        filas.append(fila)

    return pd.DataFrame(filas, columns=columnas)


def _write_frame(frame, out_dir, stem, formats):
    out_dir = Path(out_dir)
    escritos = []
    if "csv" in formats:
        frame.to_csv(out_dir / f"{stem}.csv", index=False, lineterminator="\n")
        escritos.append(out_dir / f"{stem}.csv")
    if "json" in formats:
        frame.to_json(out_dir / f"{stem}.json", orient="records", force_ascii=False, indent=2)
        escritos.append(out_dir / f"{stem}.json")
    return escritos


def write_models_table(fits, out_dir, formats=("csv",)):
    frame = models_table(fits)
    return frame, _write_frame(frame, out_dir, "models_table", formats)


# ==========================
# Corpus y cues
# ==========================
def format_statistic(value):
    """Dos decimales como máximo, sin ceros sobrantes: 0.25, 3, 12.5."""
    texto = f"{float(value):.2f}".rstrip("0").rstrip(".")
    return "0" if texto == "-0" else texto


def repository_table(corpus):
    """PRs por repositorio y categoría de tamaño, descendente, con fila Total."""
    conteos = {r.repo_full_name: 0 for r in corpus.repos}
    for pr in corpus.pulls:
        conteos[pr.repo_full_name] = conteos.get(pr.repo_full_name, 0) + 1
    tamanos = {r.repo_full_name: r.repo_size for r in corpus.repos}

    filas = [
        [repo, tamanos.get(repo, ""), n]
        for repo, n in sorted(conteos.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    filas.append(["Total", "", sum(conteos.values())])
    return pd.DataFrame(filas, columns=["owner/repository name", "repo_size", "pull_requests"])


def descriptive_table(table, kinds):
    """
    Percentil 5, mediana, media y percentil 95 de cada variable de `kinds`
    presente en `table` (DataFrame o dict nombre -> valores). Las binarias no
    llevan mediana.
    """
    filas = []
    nombres = [name for name in kinds if name in table]
    for numero, name in enumerate(nombres, start=1):
        columna = pd.Series(table[name], dtype=float)
        if columna.empty:
            logger.warning(f"Sin valores para '{name}' en la tabla descriptiva")
            continue
        q = columna.quantile([0.05, 0.5, 0.95])
        binaria = kinds[name] == BINARY
        filas.append([
            numero,
            name,
            "B" if binaria else "C",
            format_statistic(q[0.05]),
            "-" if binaria else format_statistic(q[0.5]),
            format_statistic(columna.mean()),
            format_statistic(q[0.95]),
        ])
    return pd.DataFrame(filas, columns=["No.", "variable", "type", "5%", "median", "mean", "95%"])


def write_repository_table(corpus, out_dir, formats=("csv",)):
    frame = repository_table(corpus)
    return frame, _write_frame(frame, out_dir, "pull_requests_by_repository", formats)


def write_descriptive_table(table, kinds, out_dir, formats=("csv",)):
    tabla = descriptive_table(table, kinds)
    return tabla, _write_frame(tabla, out_dir, "descriptive_statistics", formats)


def render_repository_table(repository_index):
    """Listado tipo tabla: repositorio e índice (3 decimales), descendente."""
    filas = sorted(repository_index.items(), key=lambda kv: (-kv[1], kv[0]))
    ancho = max([len("owner/repository name")] + [len(r) for r, _ in filas])
    lineas = [f"{'owner/repository name':<{ancho}}  PS index (0-10)"]
    lineas += [f"{repo:<{ancho}}  {format_index(valor)}" for repo, valor in filas]
    return "\n".join(lineas)


def render_models_table(fits):
    fits = list(fits)
    if not fits:
        return "(sin modelos ajustados)"
    return models_table(fits).to_string(index=False)


def report(fits, repository_index):
    """Texto de las dos tablas, listo para stdout."""
    return "\n\n".join([
        render_repository_table(repository_index),
        render_models_table(fits),
        "***p<0.001, **p<0.01, *p<0.05",
    ])
