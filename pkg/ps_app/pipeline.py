"""
Orquestación del pipeline: ingest -> cues -> screen -> label -> index -> fit -> report.

Cada etapa escribe su artefacto en el directorio de salida y el manifiesto
(manifest.json) registra configuración, decisiones y conteos; si una etapa
falla, el manifiesto guarda la etapa y el mensaje antes de propagar el error.
"""
import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from .corpus import (
    FilterConfig, ROLE_RULE_NOTE, ERRORS_FILE, corpus_dirs, filter_repositories, load_corpus,
    merge_corpora, save_corpus, write_ingest_errors,
)
from .cues import CUE_KINDS, CUE_NAMES, cues_to_frame, extract_corpus_cues, load_emoji_table, write_cues_csv
from .diagnostics import BINARY, CONTINUOUS, UNSCREENED, ScreeningConfig, ScreeningReport, screen_predictors
from .glm import (
    BINARY_CONTROLS, CONTINUOUS_CONTROLS, MODEL_SPECS, DesignError, ModelFit,
    build_model_frame, encode_design, fit_logistic, vif, vif_gate,
)
from .participation import LabelingConfig, label_contributors, status_counts, write_labels_csv
from .ps_index import (
    COUPLING_WARNING, SCOPES, active_bullets_for, build_summary, compute_thresholds,
    read_repository_index_csv, write_contributor_index_csv, write_repository_index_csv,
)
from .reports import (
    report as render_report, write_descriptive_table, write_models_table, write_repository_table,
)
from .utils import clean_float, read_json, sha256_of, write_json

logger = logging.getLogger(__name__)

STAGES = ("ingest", "cues", "screen", "label", "index", "fit", "report")
UNITS = ("pr", "contributor")
REPORT_FORMATS = ("csv", "json")

CUES_FILE = "cues.csv"
SCREENING_FILE = "screening_report.json"
LABELS_FILE = "labels.csv"
REPO_INDEX_FILE = "ps_index_repository.csv"
CONTRIB_INDEX_FILE = "ps_index_contributor.csv"
MANIFEST_FILE = "manifest.json"
CORPUS_DIR = "corpus"

# Cues y controles: tipo de cada variable para el cribado y la tabla descriptiva
PREDICTOR_KINDS = {
    **CUE_KINDS,
    **{c: CONTINUOUS for c in CONTINUOUS_CONTROLS},
    **{c: BINARY for c in BINARY_CONTROLS},
}


class ModelFitError(RuntimeError):
    """Ningún modelo pedido se pudo ajustar."""


# ==========================
# Configuración
# ==========================
@dataclass(frozen=True)
class PipelineConfig:
    corpus: tuple
    out: Path
    filter: FilterConfig = field(default_factory=FilterConfig)
    labeling: LabelingConfig = field(default_factory=LabelingConfig)
    screening: ScreeningConfig = field(default_factory=ScreeningConfig)
    threshold_scope: str = "global"
    merged_only: bool = False
    models: tuple = (1, 2, 3)
    unit: str = "pr"
    glm_tol: float = 1e-8
    glm_max_iter: int = 100
    vif_limit: float = 5.0
    report_formats: tuple = ("csv", "json")

    def to_dict(self):
        """Configuración efectiva sin el directorio de salida."""
        return {
            "corpus": [str(p) for p in self.corpus],
            "filter": {
                "top_n_by_stars": self.filter.top_n_by_stars,
                "excluded_labels": sorted(self.filter.excluded_labels),
            },
            "labeling": self.labeling.to_dict(),
            "screening": self.screening.to_dict(),
            "index": {"threshold_scope": self.threshold_scope, "merged_only": self.merged_only},
            "models": list(self.models),
            "unit": self.unit,
            "glm": {"tol": self.glm_tol, "max_iter": self.glm_max_iter, "vif_limit": self.vif_limit},
            "report_formats": list(self.report_formats),
        }

    @property
    def config_hash(self):
        return sha256_of(self.to_dict())


def _deep_update(base, extra):
    for key, value in (extra or {}).items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def load_pipeline_config(path=None, overrides=None):
    """
    Valores por defecto de settings.PS_DEFAULTS, luego el archivo JSON del
    estudio (--config) y por último los flags de la línea de comandos.
    """
    data = copy.deepcopy(settings.PS_DEFAULTS)
    if path:
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                desde_archivo = json.load(fh)
        except FileNotFoundError:
            raise ImproperlyConfigured(f"No existe el archivo de configuración {path}")
        except json.JSONDecodeError as e:
            raise ImproperlyConfigured(f"{path}: JSON inválido ({e.msg}, línea {e.lineno})")
        if not isinstance(desde_archivo, dict):
            raise ImproperlyConfigured(f"{path}: se esperaba un objeto JSON")
        base_dir = path.resolve().parent
        # rutas relativas del archivo se resuelven contra su directorio
        for key in ("corpus", "out"):
            if key in desde_archivo:
                valor = desde_archivo[key]
                if isinstance(valor, list):
                    desde_archivo[key] = [str(base_dir / v) for v in valor]
                elif valor is not None:
                    desde_archivo[key] = str(base_dir / valor)
        _deep_update(data, desde_archivo)
    _deep_update(data, overrides)

    corpus = data.get("corpus")
    if not corpus:
        raise ImproperlyConfigured("Falta 'corpus' en la configuración (--corpus o archivo --config).")
    corpus = tuple(Path(p) for p in (corpus if isinstance(corpus, (list, tuple)) else [corpus]))
    for p in corpus:
        if not p.is_dir():
            raise ImproperlyConfigured(f"No existe el directorio de corpus: {p}")

    if not data.get("out"):
        raise ImproperlyConfigured("Falta el directorio de salida (--out o 'out' en la configuración).")

    models = tuple(int(m) for m in data.get("models") or ())
    if not models or any(m not in MODEL_SPECS for m in models):
        raise ImproperlyConfigured(f"'models' debe ser una lista no vacía de {sorted(MODEL_SPECS)}")
    if data.get("unit") not in UNITS:
        raise ImproperlyConfigured(f"'unit' debe ser uno de {UNITS}")
    formatos = tuple(data.get("report_formats") or ())
    if not formatos or any(f not in REPORT_FORMATS for f in formatos):
        raise ImproperlyConfigured(f"'report_formats' debe ser un subconjunto no vacío de {REPORT_FORMATS}")
    index = data.get("index", {})
    if index.get("threshold_scope") not in SCOPES:
        raise ImproperlyConfigured(f"'threshold_scope' debe ser uno de {SCOPES}")

    try:
        filtro = data["filter"]
        glm = data["glm"]
        return PipelineConfig(
            corpus=corpus,
            out=Path(data["out"]),
            filter=FilterConfig(
                top_n_by_stars=int(filtro["top_n_by_stars"]),
                excluded_labels=frozenset(filtro.get("excluded_labels") or ()),
            ),
            labeling=LabelingConfig.from_dict(data["labeling"]),
            screening=ScreeningConfig(**data["screening"]),
            threshold_scope=index["threshold_scope"],
            merged_only=bool(index.get("merged_only", False)),
            models=models,
            unit=data["unit"],
            glm_tol=float(glm["tol"]),
            glm_max_iter=int(glm["max_iter"]),
            vif_limit=float(glm["vif_limit"]),
            report_formats=formatos,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ImproperlyConfigured(f"Configuración inválida: {e}")


# ==========================
# Estado de una ejecución
# ==========================
@dataclass
class PipelineRun:
    config: PipelineConfig
    corpus: object = None
    emoji_table: object = None
    cue_map: dict = None
    screening: ScreeningReport = None
    labels: dict = None
    unlabeled: list = None
    thresholds: object = None
    summary: object = None
    fits: dict = field(default_factory=dict)
    rendered: str = ""
    manifest: dict = field(default_factory=dict)

    @property
    def out(self):
        return self.config.out

    def warn(self, message):
        logger.warning(message)
        self.manifest.setdefault("warnings", []).append(message)


def control_table(corpus, unit):
    """Controles por PR (o por contribuidor) para el cribado; sin contexto no hay fila."""
    contexts = {c.key: c for c in corpus.contexts}
    stars = {r.repo_full_name: r.stars for r in corpus.repos}
    if unit == "pr":
        pares = [(pr.repo_full_name, pr.author) for pr in corpus.pulls]
    else:
        pares = corpus.contributors()
    tabla = {name: [] for name in CONTINUOUS_CONTROLS + BINARY_CONTROLS}
    for repo, author in pares:
        ctx = contexts.get((repo, author))
        if ctx is None or repo not in stars:
            continue
        tabla["followers"].append(ctx.followers)
        tabla["watchers"].append(stars[repo])
        tabla["num_languages"].append(ctx.num_languages)
        tabla["contrib_rate_author"].append(ctx.contrib_rate_author)
        tabla["social_strength"].append(ctx.social_strength)
        tabla["core_member"].append(int(ctx.core_member))
        tabla["contrib_follow_integrator"].append(int(ctx.contrib_follow_integrator))
    return {k: v for k, v in tabla.items() if v}


# ==========================
# Etapas
# ==========================
def stage_ingest(run):
    corpora = [load_corpus(d) for p in run.config.corpus for d in corpus_dirs(p)]
    cargado = merge_corpora(*corpora)
    write_ingest_errors(cargado.errors, run.out / ERRORS_FILE)
    run.corpus = filter_repositories(cargado, run.config.filter)
    save_corpus(run.corpus, run.out / CORPUS_DIR)
    run.manifest["counts"] = {"loaded": cargado.counts(), "filtered": run.corpus.counts()}
    run.manifest["role_rule"] = ROLE_RULE_NOTE
    if cargado.errors:
        run.warn(f"{len(cargado.errors)} líneas del corpus rechazadas (ver {ERRORS_FILE})")


def stage_cues(run):
    run.emoji_table = load_emoji_table()
    run.cue_map = extract_corpus_cues(run.corpus, run.emoji_table)
    write_cues_csv(run.cue_map, run.out / CUES_FILE)
    run.manifest["emoji_table_version"] = run.emoji_table.version


def predictor_table(corpus, cue_frame, unit):
    """Cues y controles (nombre -> valores) en el orden de PREDICTOR_KINDS."""
    tabla = {name: cue_frame[name].to_numpy() for name in CUE_NAMES}
    tabla.update(control_table(corpus, unit))
    return tabla


def stage_screen(run):
    tabla = predictor_table(run.corpus, cues_to_frame(run.cue_map), run.config.unit)
    run.screening = screen_predictors(tabla, PREDICTOR_KINDS, run.config.screening)
    write_json(run.out / SCREENING_FILE, run.screening.to_dict())
    run.manifest["screening"] = {
        v.name: {"decision": v.decision, "reason": v.reason} for v in run.screening.variables
    }
    sin_cribar = [v.name for v in run.screening.variables if v.decision == UNSCREENED]
    if sin_cribar:
        run.warn(f"Variables sin cribar por falta de observaciones: {', '.join(sin_cribar)}")


def stage_label(run):
    run.labels, run.unlabeled = label_contributors(run.corpus, run.config.labeling)
    write_labels_csv(run.labels, run.out / LABELS_FILE)
    run.manifest["labels"] = status_counts(run.labels)
    run.manifest["unlabeled_contributors"] = len(run.unlabeled)
    if run.unlabeled:
        run.warn(f"{len(run.unlabeled)} contribuidores sin commits quedan sin etiqueta")


def stage_index(run):
    run.thresholds = compute_thresholds(run.cue_map, run.config.threshold_scope)
    retained = [name for name in CUE_NAMES if run.screening[name].retained]
    active = active_bullets_for(retained)
    run.summary = build_summary(
        run.corpus, run.cue_map, run.labels, run.thresholds,
        merged_only=run.config.merged_only, active_bullets=active,
    )
    write_repository_index_csv(run.summary.repository_index, run.out / REPO_INDEX_FILE)
    write_contributor_index_csv(run.summary, run.out / CONTRIB_INDEX_FILE)
    run.manifest["thresholds"] = run.thresholds.to_dict()
    run.manifest["active_bullets"] = sorted(active)
    run.manifest["index_counts"] = run.summary.counts()
    run.warn(COUPLING_WARNING)


def stage_fit(run):
    cfg = run.config
    frame = build_model_frame(run.corpus, run.labels, run.summary.repository_index, cfg.unit)
    transformados = {}
    excluidos = []
    for name in CONTINUOUS_CONTROLS + BINARY_CONTROLS:
        if name not in run.screening:
            continue
        decision = run.screening[name]
        if not decision.retained:
            excluidos.append(name)
        elif decision.transformed:
            transformados[name] = "log1p"
    frame = run.screening.apply(frame)

    run.manifest["model_rows"] = len(frame)
    run.manifest["vif"] = {}
    run.manifest["models"] = {}
    fallos = []
    for k in cfg.models:
        spec = MODEL_SPECS[k].without(excluidos).with_transforms(transformados)
        quitados = sorted(set(excluidos) & set(MODEL_SPECS[k].predictors))
        if quitados:
            run.warn(f"{spec.name}: controles excluidos por el cribado: {', '.join(quitados)}")
        estado = {"spec": spec.to_dict()}
        try:
            design = encode_design(frame, spec)
            for aviso in design.warnings:
                run.warn(f"{spec.name}: {aviso}")
            try:
                vifs = vif(design)
            except DesignError:
                vifs = {}
            ok, fuera = vif_gate(vifs, cfg.vif_limit)
            run.manifest["vif"][str(k)] = {c: clean_float(v) for c, v in vifs.items()}
            if not ok:
                run.warn(f"{spec.name}: VIF >= {cfg.vif_limit:g} en {', '.join(fuera)}")
            fit = fit_logistic(design, tol=cfg.glm_tol, max_iter=cfg.glm_max_iter,
                               name=spec.name, outcome=spec.outcome)
        except ValueError as e:
            logger.error(f"{spec.name}: {e}")
            estado.update({"status": "failed", "error": str(e)})
            fallos.append(f"{spec.name}: {e}")
        else:
            run.fits[k] = fit
            write_json(run.out / f"model_{k}.json", fit.to_dict())
            estado.update({"status": "fitted", "n_obs": fit.n_obs, "iterations": fit.iterations})
        run.manifest["models"][str(k)] = estado

    if fallos and not run.fits:
        raise ModelFitError("; ".join(fallos))
    # basta un modelo ajustado para que el informe siga adelante
    for fallo in fallos:
        run.warn(f"No ajustado, se omite de la tabla: {fallo}")


def stage_report(run):
    formatos = run.config.report_formats
    write_repository_table(run.corpus, run.out, formatos)
    tabla = predictor_table(run.corpus, cues_to_frame(run.cue_map), run.config.unit)
    write_descriptive_table(tabla, PREDICTOR_KINDS, run.out, formatos)
    fits = [run.fits[k] for k in sorted(run.fits)]
    write_models_table(fits, run.out, formatos)
    run.rendered = render_report(fits, run.summary.repository_index)
    fallidos = [
        f"{estado['spec']['name']}: {estado['error']}"
        for estado in run.manifest.get("models", {}).values() if estado.get("status") == "failed"
    ]
    if fallidos:
        run.rendered += "\n\nNo ajustados:\n" + "\n".join(fallidos)


STAGE_FUNCTIONS = {
    "ingest": stage_ingest,
    "cues": stage_cues,
    "screen": stage_screen,
    "label": stage_label,
    "index": stage_index,
    "fit": stage_fit,
    "report": stage_report,
}


def run_pipeline(config, until="report"):
    """Ejecuta las etapas en orden hasta `until` (incluida) y devuelve el PipelineRun."""
    if until not in STAGES:
        raise ImproperlyConfigured(f"Etapa desconocida: {until!r}")
    config.out.mkdir(parents=True, exist_ok=True)
    run = PipelineRun(config=config)
    run.manifest.update({
        "config_hash": config.config_hash,
        "config": config.to_dict(),
        "stages_completed": [],
        "failed_stage": None,
        "error": None,
        "warnings": [],
    })
    try:
        for stage in STAGES[:STAGES.index(until) + 1]:
            logger.info(f"Etapa {stage}")
            STAGE_FUNCTIONS[stage](run)
            run.manifest["stages_completed"].append(stage)
    except Exception as e:
        run.manifest["failed_stage"] = stage
        run.manifest["error"] = f"{e.__class__.__name__}: {e}"
        logger.error(f"Etapa {stage} fallida: {e}")
        raise
    finally:
        write_json(config.out / MANIFEST_FILE, run.manifest)
    return run


# ==========================
# Re-render desde artefactos
# ==========================
def load_fits(out_dir):
    out_dir = Path(out_dir)
    fits = []
    for path in sorted(out_dir.glob("model_*.json")):
        fits.append(ModelFit.from_dict(read_json(path)))
    return fits


def rerender_report(out_dir, formats=("csv",)):
    """
    Reconstruye las tablas a partir de model_<k>.json y ps_index_repository.csv;
    si están corpus/ y cues.csv, también las de PRs por repositorio y descriptivos.
    """
    out_dir = Path(out_dir)
    index_path = out_dir / REPO_INDEX_FILE
    if not index_path.is_file():
        raise FileNotFoundError(f"Falta {index_path}; ejecute antes la etapa index")
    repository_index = read_repository_index_csv(index_path)
    if (out_dir / CORPUS_DIR / "pulls.jsonl").is_file() and (out_dir / CUES_FILE).is_file():
        corpus = load_corpus(out_dir / CORPUS_DIR)
        manifest = read_json(out_dir / MANIFEST_FILE) if (out_dir / MANIFEST_FILE).is_file() else {}
        unit = manifest.get("config", {}).get("unit", "pr")
        write_repository_table(corpus, out_dir, formats)
        tabla = predictor_table(corpus, pd.read_csv(out_dir / CUES_FILE), unit)
        write_descriptive_table(tabla, PREDICTOR_KINDS, out_dir, formats)
    fits = load_fits(out_dir)
    write_models_table(fits, out_dir, formats)
    return render_report(fits, repository_index)
