"""Configuration-driven sweeps over coefficient families and report writing."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .approx_rate import RateRecord, decay_trace, rate_record
from .families import Family, UnknownFamilyError, from_config, parse_family
from .seq_classes import find_min_N0, gbv_check, theorem1_prerequisites
from .series_eval import SeriesHandle

CHECKS = ("classes", "q_proxy", "minimax", "dual_bound", "theorem2", "theorem3", "lacunary_sharpness")
DEFAULT_CHECKS = ("classes", "q_proxy", "minimax", "dual_bound", "theorem2", "theorem3")
TOLERANCE_KEYS = ("tail_tolerance", "grid_oversample", "N_max", "n0_cap")
CONFIG_KEYS = {"family", "families", "degrees", "checks", "tolerances", "output"}
OUTPUT_KEYS = {"dir", "format", "name"}
CSV_COLUMNS = ("family", "n", "class_verdict", "gbv_M", "gbv_N0", "e_n_lower", "e_n_numeric", "q_head",
               "q_odd_tail", "q_even_tail", "q_n", "ratio_en_qn", "s_n_error", "ratio_thm3")

# acceptance-style gates applied to every run
LOWER_BOUND_SLACK = 1e-7
MONOTONE_SLACK = 1e-9
DRIFT_FACTOR = 4.0
DECAY_FACTOR = 0.1
NEGLIGIBLE_ERROR = 1e-12  # below this E_n is rounding noise and has no alternation structure


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


@dataclass
class ExperimentConfig:
    families: List[Family]
    degrees: List[int]
    checks: tuple = DEFAULT_CHECKS
    tail_tolerance: float = 1e-10
    grid_oversample: int = 4
    N_max: Optional[int] = None
    n0_cap: int = 8
    out_dir: str = "gbvlab_out"
    fmt: str = "csv"
    name: Optional[str] = None

    @property
    def family(self) -> Family:
        return self.families[0]


def parse_degrees(spec) -> List[int]:
    """``[4, 8, 16]``, ``"4,8,16"``, ``"4:64:x2"`` (geometric) or ``{"start", "stop", "factor"}``."""
    if isinstance(spec, str):
        m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*:\s*x\s*(\d+)\s*", spec)
        if m:
            spec = {"start": int(m.group(1)), "stop": int(m.group(2)), "factor": int(m.group(3))}
        else:
            try:
                spec = [int(t) for t in spec.split(",") if t.strip()]
            except ValueError:
                raise ConfigError(f"cannot parse degree list {spec!r}") from None
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "factor"}
        if extra:
            raise ConfigError(f"unknown keys in degree range: {sorted(extra)}")
        start, stop, factor = int(spec["start"]), int(spec["stop"]), int(spec.get("factor", 2))
        if start < 1 or factor < 2:
            raise ConfigError("geometric degree range needs start >= 1 and factor >= 2")
        out, d = [], start
        while d <= stop:
            out.append(d)
            d *= factor
        spec = out
    if not isinstance(spec, (list, tuple)) or not all(isinstance(d, int) and not isinstance(d, bool) for d in spec):
        raise ConfigError(f"degrees must be a list of integers, got {spec!r}")
    degrees = list(spec)
    if not degrees:
        raise ConfigError("degrees must be nonempty")
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise ConfigError("degrees must be strictly increasing")
    return degrees


def _validate_degrees(degrees: List[int], checks) -> None:
    if degrees[0] < 0:
        raise ConfigError("degrees must be >= 0")
    if degrees[0] == 0 and set(checks) - {"minimax", "classes"}:
        raise ConfigError("degree 0 is only allowed for minimax-only runs")


def parse_checks(checks) -> tuple:
    if isinstance(checks, str):
        checks = [c.strip() for c in checks.split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check(s) {bad}; known: {', '.join(CHECKS)}")
    return tuple(c for c in CHECKS if c in checks)


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(d) - CONFIG_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    if ("family" in d) == ("families" in d):
        raise ConfigError("config needs exactly one of 'family' or 'families'")
    entries = [d["family"]] if "family" in d else d["families"]
    if not isinstance(entries, list):
        raise ConfigError("'families' must be a list")
    try:
        fams = [from_config(e) for e in entries]
    except UnknownFamilyError as exc:
        raise ConfigError(exc.args[0]) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if "degrees" not in d:
        raise ConfigError("config needs 'degrees'")
    checks = parse_checks(d.get("checks", list(DEFAULT_CHECKS)))
    degrees = parse_degrees(d["degrees"])
    _validate_degrees(degrees, checks)
    tol = d.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("'tolerances' must be an object")
    extra = set(tol) - set(TOLERANCE_KEYS)
    if extra:
        raise ConfigError(f"unknown tolerance keys: {sorted(extra)}")
    out = d.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("'output' must be an object")
    extra = set(out) - OUTPUT_KEYS
    if extra:
        raise ConfigError(f"unknown output keys: {sorted(extra)}")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output format must be 'csv' or 'json'")
    cfg = ExperimentConfig(fams, degrees, checks, out_dir=out.get("dir", "gbvlab_out"), fmt=fmt,
                           name=out.get("name"))
    try:
        if "tail_tolerance" in tol:
            cfg.tail_tolerance = float(tol["tail_tolerance"])
            if not cfg.tail_tolerance > 0:
                raise ConfigError("tail_tolerance must be positive")
        if "grid_oversample" in tol:
            cfg.grid_oversample = int(tol["grid_oversample"])
            if cfg.grid_oversample < 4:
                raise ConfigError("grid_oversample must be >= 4")
        if "N_max" in tol:
            cfg.N_max = int(tol["N_max"])
        if "n0_cap" in tol:
            cfg.n0_cap = int(tol["n0_cap"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad tolerance value: {exc}") from None
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    return config_from_dict(data)


# -- running --------------------------------------------------------------

@dataclass
class ExperimentReport:
    family: str
    classes: Optional[dict] = None
    rows: List[RateRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    skipped: Optional[str] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def class_columns(self):
        c = self.classes
        if not c or "theorem1" not in c:
            return "", None, None
        t = c["theorem1"]
        verdict = "holds" if t["holds"] else "fails"
        Ms = [r["constant"] for r in (t["primary"], t["combined"]) if r["constant"] is not None]
        N0s = [v for v in (t["N0_primary"], t["N0_combined"]) if v is not None]
        return verdict, (max(Ms) if Ms and t["holds"] else None), (max(N0s) if N0s and t["holds"] else None)


def classify(fam: Family, n0_cap: int = 8, m_range=(1, 2048)) -> dict:
    """Both GBV hypotheses (after rotation) plus the plain GBV scan of the generating sequence."""
    pre = theorem1_prerequisites(fam.seq, n0_cap, m_range)
    N0, rep = find_min_N0(fam.base, n0_cap, m_range)
    return {"family": fam.label, "theorem1": pre.to_record(),
            "base_gbv": {"N0": N0, **rep.to_record()}}


def _convergent(fam: Family) -> bool:
    from .series_eval import convergence_conditions

    return convergence_conditions(fam.seq)[0]


def run_experiment(cfg: ExperimentConfig, fam: Optional[Family] = None) -> ExperimentReport:
    """Run the configured checks for one family over all degrees."""
    fam = fam or cfg.family
    rep = ExperimentReport(fam.label)
    checks = cfg.checks
    if "classes" in checks:
        rep.classes = classify(fam, cfg.n0_cap)
    if "lacunary_sharpness" in checks:
        rep.summary["lacunary"] = lacunary_study(fam, n0_cap=64)
        if rep.summary["lacunary"]["min_N0"] is not None:
            rep.violations.append("lacunary family passed the GBV scan")
    rate_checks = [c for c in checks if c in ("q_proxy", "minimax", "dual_bound", "theorem3")]
    h = SeriesHandle(fam.seq, cfg.tail_tolerance, cfg.grid_oversample)
    if rate_checks:
        for n in cfg.degrees:
            try:
                rec = rate_record(h, n, rate_checks, cfg.N_max)
            except Exception as exc:  # recorded per row; the sweep goes on
                rec = RateRecord(n, errors=[f"{type(exc).__name__}: {exc}"])
            rep.rows.append(rec)
    if "theorem2" in checks:
        trace = decay_trace(fam.seq)
        rep.summary["theorem2_trace"] = [[n, v] for n, v in trace]
        if _convergent(fam) and trace[0][1] > 0 and not trace[-1][1] < DECAY_FACTOR * trace[0][1]:
            rep.violations.append("n|c(n)| did not fall below 0.1x its initial value")
    _summarise(rep)
    return rep


def _summarise(rep: ExperimentReport) -> None:
    rows = rep.rows
    ratios = [r.ratio_en_qn for r in rows if r.ratio_en_qn is not None]
    if ratios:
        rep.summary["ratio_en_qn_min"] = min(ratios)
        rep.summary["ratio_en_qn_max"] = max(ratios)
        drift = ratios[-1] / ratios[0]
        rep.summary["ratio_drift"] = drift
        if not (1 / DRIFT_FACTOR <= drift <= DRIFT_FACTOR):
            rep.violations.append(f"E_n/Q_n drifted by {drift:.3g} across the sweep")
    t3 = [r.ratio_thm3 for r in rows if r.ratio_thm3 is not None]
    if t3:
        rep.summary["ratio_thm3_max"] = max(t3)
    lemma5 = [r.q_parts[2] / r.e_n_numeric for r in rows if r.q_parts and r.e_n_numeric]
    if lemma5:
        rep.summary["lemma5_c_emp"] = lemma5
    for r in rows:
        if r.errors:
            rep.violations.append(f"n={r.n}: " + "; ".join(r.errors))
        if r.e_n_lower is not None and r.e_n_numeric is not None and r.e_n_lower > r.e_n_numeric + LOWER_BOUND_SLACK:
            rep.violations.append(f"n={r.n}: dual lower bound {r.e_n_lower:.6g} exceeds E_n {r.e_n_numeric:.6g}")
        if (r.alternations is not None and r.e_n_numeric is not None and r.e_n_numeric > NEGLIGIBLE_ERROR
                and r.alternations < 2 * r.n + 2):
            rep.violations.append(f"n={r.n}: only {r.alternations} alternations")
        if r.equivalence_failure:
            rep.violations.append(f"n={r.n}: Q_n = 0 while E_n = {r.e_n_numeric:.3g}")
    e = [(r.n, r.e_n_numeric) for r in rows if r.e_n_numeric is not None]
    for (n0, a), (n1, b) in zip(e, e[1:]):
        if b > a + MONOTONE_SLACK:
            rep.violations.append(f"E_n increased from n={n0} to n={n1}")


@dataclass
class SuiteReport:
    reports: List[ExperimentReport] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    @property
    def flagged(self) -> List[str]:
        return [r.family for r in self.reports if r.violations]

    @property
    def skipped(self):
        return {r.family: r.skipped for r in self.reports if r.skipped}


def run_equivalence_suite(families, degrees, cfg: Optional[ExperimentConfig] = None) -> SuiteReport:
    """Sweep each family whose GBV prerequisites hold; others are skipped with the reason."""
    fams = [f if isinstance(f, Family) else parse_family(f) for f in families]
    base = cfg or ExperimentConfig(fams, list(degrees))
    suite = SuiteReport()
    for fam in fams:
        cls = classify(fam, base.n0_cap)
        if not cls["theorem1"]["holds"]:
            suite.reports.append(ExperimentReport(fam.label, classes=cls, skipped="GBV prerequisite failed"))
            continue
        sub = ExperimentConfig([fam], list(degrees), tuple(c for c in base.checks if c != "classes"),
                               base.tail_tolerance, base.grid_oversample, base.N_max, base.n0_cap)
        rep = run_experiment(sub, fam)
        rep.classes = cls
        suite.reports.append(rep)
    return suite


def lacunary_study(fam: Family, eps: float = 0.1, n0_cap: int = 64, m_range=(1, 8192), kmax: int = 256) -> dict:
    """GBV scan for every ``N0 <= n0_cap`` and the trace of ``n**eps b_n`` at ``n = 2**k``."""
    failures = {}
    for N0 in range(1, n0_cap + 1):
        r = gbv_check(fam.base, N0, m_range)
        failures[N0] = None if r.holds else r.witness
    N0, _ = find_min_N0(fam.base, n0_cap, m_range)
    trace = []
    for k in range(1, kmax + 1):
        n = 1 << k  # exact integer index
        b = fam.base(n).real
        trace.append([k, math.exp(eps * k * math.log(2.0)) * b])
    vals = np.array([v for _, v in trace])
    kmin = int(np.argmin(vals))
    after = vals[kmin:]
    return {
        "family": fam.label,
        "eps": eps,
        "min_N0": N0,
        "failing_N0": sorted(k for k, w in failures.items() if w is not None),
        "witnesses": {str(k): w for k, w in failures.items()},
        "trace": trace,
        "trace_argmin_k": kmin + 1,
        "increasing_after_min": bool(np.all(np.diff(after) > 0)),
        "growth": float(vals[-1] / vals[kmin]),
    }


# -- output ---------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(v)


def csv_rows(rep: ExperimentReport):
    verdict, M, N0 = rep.class_columns()
    for r in rep.rows:
        parts = r.q_parts or (None, None, None)
        yield [rep.family, r.n, verdict, M, N0, r.e_n_lower, r.e_n_numeric, parts[0], parts[1], parts[2],
               r.q_n, r.ratio_en_qn, r.s_n_error, r.ratio_thm3]


def to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for row in csv_rows(rep):
            w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else str(v)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def report_record(rep: ExperimentReport) -> dict:
    rows = []
    for r in rep.rows:
        rows.append({"n": r.n, "e_n_numeric": r.e_n_numeric, "e_n_upper": r.e_n_upper, "e_n_lower": r.e_n_lower,
                     "q_n": r.q_n, "q_parts": r.q_parts, "ratio_en_qn": r.ratio_en_qn, "s_n_error": r.s_n_error,
                     "ratio_thm3": r.ratio_thm3, "alternations": r.alternations, "method": r.method,
                     "errors": r.errors})
    return _jsonable({"family": rep.family, "skipped": rep.skipped, "classes": rep.classes, "rows": rows,
                      "summary": rep.summary, "violations": rep.violations})


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def output_dir(default: str) -> str:
    return os.environ.get("GBVLAB_OUT") or default


def slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_") or "run"


def write_reports(reports, out_dir: str, stem: str, fmt: str = "csv") -> List[str]:
    """Write the rate table (CSV or JSON) plus a JSON file with classes and summaries."""
    paths = []
    records = [report_record(r) for r in reports]
    if fmt == "csv":
        p = os.path.join(out_dir, f"{stem}.csv")
        atomic_write(p, to_csv(reports))
        paths.append(p)
        p = os.path.join(out_dir, f"{stem}_summary.json")
    else:
        p = os.path.join(out_dir, f"{stem}.json")
    atomic_write(p, json.dumps(records, indent=2, sort_keys=True) + "\n")
    paths.append(p)
    return paths
