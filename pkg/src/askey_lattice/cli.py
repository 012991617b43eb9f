"""Command-line front end.

Every command builds one family instance from flags (or ``--config``),
computes a table and writes it once, as CSV (``%.17g`` numbers, header row)
or JSON. Exit codes: 0 success, 1 domain error or failed ``verify``,
2 usage or configuration error. Errors print ``<ErrorName>: <message>`` on
stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

import numpy as np

from . import families as fam
from . import fermion, spectral, spin, stochastic
from .errors import AskeyLatticeError, ConfigError

PARAM_FLAGS = ("p", "a", "b", "c", "d", "beta", "q")
FORMATS = ("csv", "json")
KINDS = ("bd", "walk", "magnon")
JSON_DEFAULT = {"verify": "json", "spin-export": "json"}


# ---------------------------------------------------------------------------
# job configuration
# ---------------------------------------------------------------------------


@dataclass
class JobConfig:
    """Everything a command needs; built from flags, then ``--config`` overrides."""

    command: str
    family: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    N: int | None = None
    M: int | None = None
    eps_tail: float = fam.DEFAULT_EPS_TAIL
    M_max: int = fam.DEFAULT_M_MAX
    min_modes: int = 1
    mu: float | None = None
    t: list[float] = field(default_factory=lambda: [0.0])
    L: list[int] | None = None
    variant: str = "standard"
    tol: float = 1e-9
    kind: str = "bd"
    start: int = 0
    coeffs: list[complex] | None = None
    p0: list[float] | None = None
    format: str | None = None
    output: str | None = None

    def instance(self) -> fam.FamilyInstance:
        if self.family is None:
            raise ConfigError("field 'family' is required")
        fid = fam.FamilyId.parse(self.family)
        if fid in fam.FINITE_FAMILIES:
            return fam.validate(fid, self.params, self.N)
        if self.N is not None:
            raise ConfigError(f"{fid.value} is semi-infinite: use M/eps_tail instead of N")
        return fam.validate(
            fid, self.params, M=self.M, eps_tail=self.eps_tail, M_max=self.M_max,
            min_modes=self.min_modes,
        )

    def need_mu(self) -> float:
        if self.mu is None:
            raise ConfigError(f"command {self.command!r} needs --mu")
        return self.mu


_TRUNCATION_KEYS = {"M", "eps_tail", "M_max", "min_modes"}


def _coerce(name: str, value: Any, kind: type, *, many: bool = False):
    def one(v):
        if kind is complex:
            if isinstance(v, str):
                return complex(v.replace(" ", ""))
            if isinstance(v, (list, tuple)) and len(v) == 2:
                return complex(float(v[0]), float(v[1]))
            return complex(v)
        if kind is int:
            if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                raise ValueError(v)
            return int(v)
        if kind is float:
            if isinstance(v, bool):
                raise ValueError(v)
            return float(v)
        if not isinstance(v, str):
            raise ValueError(v)
        return v

    try:
        if many:
            if not isinstance(value, list):
                value = [value]
            return [one(v) for v in value]
        return one(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field {name!r}: cannot read {value!r} as {kind.__name__}") from None


_FIELD_TYPES: dict[str, tuple[type, bool]] = {
    "family": (str, False), "N": (int, False), "M": (int, False),
    "eps_tail": (float, False), "M_max": (int, False), "min_modes": (int, False),
    "mu": (float, False), "t": (float, True), "L": (int, True), "variant": (str, False),
    "tol": (float, False), "kind": (str, False), "start": (int, False),
    "coeffs": (complex, True), "p0": (float, True), "format": (str, False),
    "output": (str, False),
}


def load_config(path: str, job: JobConfig) -> JobConfig:
    """Apply a JSON config file on top of ``job``.

    Keys: the fields of :class:`JobConfig` except ``command``; ``params`` is
    an object of family parameters and ``truncation`` may group ``M``,
    ``eps_tail``, ``M_max`` and ``min_modes``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    data = dict(data)
    trunc = data.pop("truncation", {})
    if not isinstance(trunc, dict) or set(trunc) - _TRUNCATION_KEYS:
        raise ConfigError(f"{path}: field 'truncation' takes only {sorted(_TRUNCATION_KEYS)}")
    data.update(trunc)
    if "params" in data:
        params = data.pop("params")
        if not isinstance(params, dict):
            raise ConfigError(f"{path}: field 'params' must be an object")
        job.params = {k: _coerce(f"params.{k}", v, float) for k, v in params.items()}
    for key, value in data.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}: unknown field {key!r}")
        kind, many = _FIELD_TYPES[key]
        setattr(job, key, None if value is None else _coerce(key, value, kind, many=many))
    if job.format is not None and job.format not in FORMATS:
        raise ConfigError(f"{path}: field 'format' must be one of {FORMATS}")
    if job.kind not in KINDS:
        raise ConfigError(f"{path}: field 'kind' must be one of {KINDS}")
    return job


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def json(self) -> str:
        out = dict(self.meta)
        out["columns"] = self.columns
        out["rows"] = _plain(self.rows)
        return json.dumps(_plain(out), indent=2, sort_keys=True) + "\n"


def _meta(inst: fam.FamilyInstance, **extra) -> dict:
    out = {
        "family": inst.family.value,
        "params": inst.param_dict(),
        "lattice": spectral.lattice_dict(inst),
    }
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_list_families(job: JobConfig) -> tuple[str, int]:
    rows = []
    for fid in fam.FamilyId:
        kind = "finite" if fid in fam.FINITE_FAMILIES else "semi-infinite"
        rows.append([fid.value, kind, ";".join(fam.param_names(fid)),
                     ";".join(fam.constraint_labels(fid))])
    table = Table(["family", "lattice", "params", "constraints"], rows)
    if job.format == "json":
        recs = [dict(zip(table.columns, r)) for r in rows]
        for r in recs:
            r["params"] = r["params"].split(";") if r["params"] else []
            r["constraints"] = r["constraints"].split(";") if r["constraints"] else []
        return json.dumps({"families": recs}, indent=2, sort_keys=True) + "\n", 0
    return table.csv(), 0


def cmd_spectrum(job: JobConfig) -> Table:
    inst = job.instance()
    rows = [[n, fam.energy(inst, n)] for n in fam.modes(inst)]
    return Table(["n", "energy"], rows, _meta(inst))


def cmd_eigvecs(job: JobConfig) -> Table:
    inst = job.instance()
    V = spectral.analytic_eigensystem(inst).vectors
    cols = ["x"] + [f"n{n}" for n in range(V.shape[1])]
    rows = [[x] + list(V[x]) for x in range(V.shape[0])]
    return Table(cols, rows, _meta(inst))


def cmd_verify(job: JobConfig) -> tuple[str, int]:
    inst = job.instance()
    report = spectral.verify(inst, job.tol)
    code = 0 if report.passed else 1
    if job.format == "json":
        return report.to_json() + "\n", code
    rows = [[c.name, c.defect, c.tol, c.passed] for c in report.checks]
    rows.append(["degenerate_gap", float(report.degenerate_gap), 0.0, not report.degenerate_gap])
    rows.append(["overall", float(not report.passed), 0.0, report.passed])
    return Table(["check", "defect", "tol", "passed"], rows).csv(), code


def cmd_correlation(job: JobConfig) -> Table:
    inst = job.instance()
    C = fermion.correlation_matrix(inst, job.need_mu())
    cols = [str(y) for y in range(C.size)]
    return Table(cols, [list(r) for r in C.entries], _meta(inst, mu=job.mu, K=C.level.K))


def cmd_entropy(job: JobConfig) -> Table:
    inst = job.instance()
    pairs = fermion.entropy_sweep(inst, job.need_mu(), job.L)
    return Table(["L", "S"], [[L, s] for L, s in pairs], _meta(inst, mu=job.mu))


def cmd_evolve(job: JobConfig) -> Table:
    inst = job.instance()
    ts = job.t
    if job.kind == "bd":
        if job.p0 is not None:
            p0 = job.p0
        else:
            fam._check_site(inst, job.start)
            p0 = np.zeros(inst.size)
            p0[job.start] = 1.0
        traj = stochastic.bd_evolve(inst, p0, ts)
        rows = [[t, x, p] for t, ps in zip(traj.ts, traj.probs) for x, p in enumerate(ps)]
        return Table(["t", "x", "p"], rows, _meta(inst, kind="bd"))
    mu = job.mu if job.mu is not None else 0.0
    beta = job.coeffs if job.coeffs is not None else fermion.site_coefficients(inst, job.start)
    rows = []
    for t in ts:
        if job.kind == "walk":
            amp = fermion.evolve_single_particle(inst, mu, beta, t).amplitudes
        else:
            amp = spin.magnon_state(inst, mu, beta, t, job.variant).amplitudes
        rows.extend([t, x, a.real, a.imag, abs(a) ** 2] for x, a in enumerate(amp))
    extra = {"variant": job.variant} if job.kind == "magnon" else {}
    return Table(["t", "x", "re", "im", "abs2"], rows, _meta(inst, kind=job.kind, mu=mu, **extra))


def cmd_spin_export(job: JobConfig) -> tuple[str, int]:
    inst = job.instance()
    chain = spin.export_chain(inst, job.mu if job.mu is not None else 0.0, job.variant)
    if job.format == "json":
        return chain.to_json() + "\n", 0
    rows = [[x, chain.couplings[x] if x < len(chain.couplings) else "", h]
            for x, h in enumerate(chain.fields)]
    return Table(["x", "coupling", "field"], rows).csv(), 0


COMMANDS = {
    "list-families": cmd_list_families,
    "spectrum": cmd_spectrum,
    "eigvecs": cmd_eigvecs,
    "verify": cmd_verify,
    "correlation": cmd_correlation,
    "entropy": cmd_entropy,
    "evolve": cmd_evolve,
    "spin-export": cmd_spin_export,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _list_of(kind: type):
    def parse(text: str):
        try:
            return [kind(v.strip()) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated {kind.__name__} values") from None
    parse.__name__ = f"{kind.__name__}-list"
    return parse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="askey-lattice", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    out = common.add_argument_group("output")
    out.add_argument("--format", choices=FORMATS,
                     help="default json for verify and spin-export, csv otherwise")
    out.add_argument("--output", help="write here instead of stdout")
    out.add_argument("--config", help="JSON job file; its fields override flags")

    inst = _Parser(add_help=False)
    g = inst.add_argument_group("family")
    g.add_argument("--family", help="tag, e.g. krawtchouk, q-racah (see list-families)")
    for name in PARAM_FLAGS:
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--N", type=int, help="finite lattice size (sites 0..N)")
    tr = inst.add_argument_group("truncation (semi-infinite families)")
    tr.add_argument("--M", type=int)
    tr.add_argument("--eps-tail", type=float, default=fam.DEFAULT_EPS_TAIL)
    tr.add_argument("--M-max", type=int, default=fam.DEFAULT_M_MAX)
    tr.add_argument("--min-modes", type=int, default=1)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list-families", parents=[common], help="tags, parameters, constraints")
    sub.add_parser("spectrum", parents=[inst, common], help="n, E(n)")
    sub.add_parser("eigvecs", parents=[inst, common], help="orthonormal eigenvectors")
    p = sub.add_parser("verify", parents=[inst, common], help="closed forms vs oracle")
    p.add_argument("--tol", type=float, default=1e-9)
    p = sub.add_parser("correlation", parents=[inst, common], help="ground-state C matrix")
    p.add_argument("--mu", type=float)
    p = sub.add_parser("entropy", parents=[inst, common], help="block entropy S(L)")
    p.add_argument("--mu", type=float)
    p.add_argument("--L", type=_list_of(int), help="block ends, e.g. 0,1,2")
    p = sub.add_parser("evolve", parents=[inst, common], help="time evolution")
    p.add_argument("--kind", choices=KINDS, default="bd")
    p.add_argument("--t", type=_list_of(float), default=[0.0], help="times, e.g. 0,0.5,1")
    p.add_argument("--mu", type=float)
    p.add_argument("--start", type=int, default=0, help="initial site")
    p.add_argument("--coeffs", type=_list_of(complex), help="mode coefficients (walk, magnon)")
    p.add_argument("--p0", type=_list_of(float), help="initial distribution (bd)")
    p.add_argument("--variant", choices=spin.VARIANTS, default="standard")
    p = sub.add_parser("spin-export", parents=[inst, common], help="XX chain couplings/fields")
    p.add_argument("--mu", type=float)
    p.add_argument("--variant", choices=spin.VARIANTS, default="standard")
    return parser


def job_from_args(ns: argparse.Namespace) -> JobConfig:
    args = vars(ns)
    job = JobConfig(command=ns.command)
    job.params = {k: args[k] for k in PARAM_FLAGS if args.get(k) is not None}
    for f in fields(JobConfig):
        if f.name in ("command", "params") or f.name not in args:
            continue
        if args[f.name] is not None:
            setattr(job, f.name, args[f.name])
    if ns.config:
        load_config(ns.config, job)
    if job.format is None:
        job.format = JSON_DEFAULT.get(job.command, "csv")
    return job


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Execute one command; returns the exit code."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        ns = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        job = job_from_args(ns)
        result = COMMANDS[job.command](job)
        if isinstance(result, Table):
            text, code = (result.json() if job.format == "json" else result.csv()), 0
        else:
            text, code = result
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=stderr)
        return 2
    except AskeyLatticeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=stderr)
        return 1
    if job.output:
        try:
            with open(job.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"ConfigError: cannot write {job.output}: {exc.strerror}", file=stderr)
            return 2
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
