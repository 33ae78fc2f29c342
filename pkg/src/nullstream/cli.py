"""Command-line front end: instance generation, budgeted runs, lemma
certification, and batch experiment sweeps.

Exit codes: 0 success (for verify: criteria met), 2 validation failure,
3 infeasible generation, 4 budget violation, 5 algorithm failure. CSV and
JSON output use LF newlines and 17-significant-digit floats throughout.
"""

import argparse
import csv
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

from .algorithms import REGISTRY, build_algorithm
from .config import DEFAULTS
from .errors import (
    AcceptanceTooRare,
    BudgetViolation,
    DegenerateOutput,
    NotSeparableInProjection,
    NullstreamError,
    ValidationError,
)
from .instances import (
    AnvInstance,
    DEFAULT_MAX_ATTEMPTS,
    LrInstance,
    LspDataset,
    anv_loss,
    classification_error,
    first_coord_tail,
    gen_anv_conditioned,
    gen_anv_gaussian,
    gen_lr_from_anv,
    gen_lsp_from_anv,
    gen_lsp_hard,
    gen_lsp_margin,
    lr_loss,
    margin_of,
)
from .serialize import (
    csv_cell,
    dumps,
    instance_from_json,
    instance_to_json,
    report_to_csv,
    report_to_json,
)
from .streaming import SharedRandomness, run_one_pass_stats, shuffle
from .verification import (
    certify_no_joint_sol,
    certify_sandwich,
    comorth_check,
    singular_value_experiment,
    sphere_concentration_test,
    sphere_marginal_tests,
)

METRIC_COLUMNS = ("loss", "error", "margin")

# the null-vector objective scores unit candidates only, so the zero
# baseline is meaningful just for the other two problem types
COMPATIBLE = {
    "anv": ("random-unit", "offline-kernel"),
    "lsp": ("zero", "random-unit", "offline-separator", "proj-separator"),
    "lr": ("zero", "random-unit", "offline-lstsq"),
}


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError("cannot read %s: %s" % (path, exc)) from exc


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError("cannot write %s: %s" % (path, exc)) from exc


def _instance_kind(inst) -> str:
    if isinstance(inst, AnvInstance):
        return "anv"
    if isinstance(inst, LspDataset):
        return "lsp"
    if isinstance(inst, LrInstance):
        return "lr"
    raise ValidationError("unknown instance type %s" % type(inst).__name__)


def _samples_for(inst) -> list:
    kind = _instance_kind(inst)
    if kind == "anv":
        return [row for row in inst.vectors]
    if kind == "lsp":
        return inst.points()
    return list(zip(inst.a, inst.b))


def _metrics_for(inst, w) -> dict:
    kind = _instance_kind(inst)
    if kind == "anv":
        return {"loss": anv_loss(inst, w)}
    if kind == "lsp":
        return {"error": classification_error(w, inst), "margin": margin_of(w, inst)}
    return {"loss": lr_loss(inst, w)}


def _shuffle_seed(seed: int) -> int:
    # distinct derivation so a shuffled run never replays the per-sample
    # randomness stream the algorithms themselves draw from
    return int(SharedRandomness(seed).generator("order-shuffle").integers(1 << 63))


def _ordered_samples(inst, order: str, seed: int) -> list:
    samples = _samples_for(inst)
    if order == "shuffled":
        return shuffle(samples, _shuffle_seed(seed))
    if order != "fixed":
        raise ValidationError("order must be fixed or shuffled")
    return samples


# ---------------------------------------------------------------------------
# gen


def _diagnostics(inst) -> list:
    kind = _instance_kind(inst)
    if kind == "anv":
        lines = [
            "residual = %.3e" % float(np.abs(inst.vectors @ inst.witness).max()),
            "witness_first_coord = %.6f" % float(inst.witness[0]),
        ]
        if inst.cf is not None:
            lines.append("tail_estimate = %.3e" % first_coord_tail(inst.d, inst.cf))
        return lines
    if kind == "lsp":
        norms = np.linalg.norm(inst.xs, axis=1)
        achieved = float(np.min((inst.xs @ inst.witness) * inst.ys / norms))
        return ["margin = %.6g" % inst.margin, "achieved_margin = %.6g" % achieved]
    return [
        "residual = %.3e" % float(np.linalg.norm(inst.a @ inst.witness - inst.b)),
        "witness_norm = %.6f" % float(np.linalg.norm(inst.witness)),
    ]


def _generate(problem: str, opts: dict):
    """Build an instance from a generator name and a flat option dict.

    Every option must be consumed; leftovers are a validation error so that
    misspelled experiment-grid keys fail loudly.
    """
    opts = dict(opts)

    def take(key, cast, default=KeyError):
        if key in opts:
            return cast(opts.pop(key))
        if default is KeyError:
            raise ValidationError("%s requires parameter %r" % (problem, key))
        return default

    if problem == "anv-gaussian":
        inst = gen_anv_gaussian(take("d", int), take("seed", int))
    elif problem == "anv-conditioned":
        inst = gen_anv_conditioned(
            take("d", int),
            take("cf", float),
            take("seed", int),
            max_attempts=take("max_attempts", int, DEFAULT_MAX_ATTEMPTS),
        )
    elif problem == "lsp-margin":
        inst = gen_lsp_margin(
            take("d", int), take("m", int), take("gamma", float), take("seed", int)
        )
    elif problem == "lsp-hard":
        inst, _, _ = gen_lsp_hard(
            take("d", int),
            take("m", int),
            take("cf", float),
            take("c", float),
            take("seed", int),
            max_attempts=take("max_attempts", int, DEFAULT_MAX_ATTEMPTS),
        )
    else:
        raise ValidationError("unknown problem %r" % (problem,))
    if opts:
        raise ValidationError(
            "unknown parameters for %s: %s" % (problem, ", ".join(sorted(opts)))
        )
    return inst


def cmd_gen(args) -> int:
    if args.problem == "lsp-from-anv":
        inner, _ = instance_from_json(_read_text(args.instance))
        if not isinstance(inner, AnvInstance):
            raise ValidationError("lsp-from-anv needs a null-vector instance file")
        inst = gen_lsp_from_anv(inner, args.c4)
        seed = 0
    elif args.problem == "lr-from-anv":
        inner, _ = instance_from_json(_read_text(args.instance))
        if not isinstance(inner, AnvInstance):
            raise ValidationError("lr-from-anv needs a null-vector instance file")
        inst = gen_lr_from_anv(inner, args.seed)
        seed = args.seed
    else:
        opts = {"d": args.d, "seed": args.seed}
        for key in ("cf", "c", "m", "gamma", "max_attempts"):
            if getattr(args, key, None) is not None:
                opts[key] = getattr(args, key)
        inst = _generate(args.problem, opts)
        seed = args.seed
    _write_text(args.out, instance_to_json(inst, seed))
    print("wrote %s" % args.out)
    print("type = %s  d = %d" % (_instance_kind(inst), inst.d))
    for line in _diagnostics(inst):
        print(line)
    return 0


# ---------------------------------------------------------------------------
# run


def _run_report(inst, algorithm: str, budget_bits: int, seed: int, order: str) -> dict:
    kind = _instance_kind(inst)
    if algorithm not in REGISTRY:
        raise ValidationError(
            "unknown algorithm %r; registered: %s" % (algorithm, ", ".join(REGISTRY))
        )
    if algorithm not in COMPATIBLE[kind]:
        raise ValidationError(
            "algorithm %s does not accept %s instances (try: %s)"
            % (algorithm, kind, ", ".join(COMPATIBLE[kind]))
        )
    samples = _ordered_samples(inst, order, seed)
    alg = build_algorithm(algorithm, inst.d, seed)
    w, stats = run_one_pass_stats(alg, samples, budget_bits, seed)
    return {
        "instance_type": kind,
        "d": inst.d,
        "n_samples": len(samples),
        "algorithm": algorithm,
        "budget_bits": budget_bits,
        "seed": seed,
        "order": order,
        "max_used_bits": stats.max_used_bits,
        "metrics": _metrics_for(inst, w),
    }


RUN_CSV_COLUMNS = (
    "instance_type",
    "d",
    "n_samples",
    "algorithm",
    "budget_bits",
    "seed",
    "order",
    "max_used_bits",
) + METRIC_COLUMNS


def _append_csv_rows(path: str, columns, rows):
    exists = os.path.exists(path) and os.path.getsize(path) > 0
    if exists:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            header = next(csv.reader(fh), None)
        if header != list(columns):
            raise ValidationError("existing %s has different columns" % path)
    try:
        with open(path, "a", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if not exists:
                writer.writerow(columns)
            writer.writerows(rows)
    except OSError as exc:
        raise ValidationError("cannot write %s: %s" % (path, exc)) from exc


def cmd_run(args) -> int:
    inst, _ = instance_from_json(_read_text(args.instance))
    report = _run_report(inst, args.alg, args.budget, args.seed, args.order)
    print(dumps(report))
    if args.csv:
        flat = dict(report)
        metrics = flat.pop("metrics")
        for key in METRIC_COLUMNS:
            flat[key] = metrics.get(key)
        _append_csv_rows(
            args.csv, RUN_CSV_COLUMNS, [[csv_cell(flat[c]) for c in RUN_CSV_COLUMNS]]
        )
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_no_joint_sol(args):
    report = certify_no_joint_sol(
        args.d, args.delta, args.trials, args.seed, c_emp=args.c_emp
    )
    return report, report.pass_fraction == 1.0


def _verify_sandwich(args):
    report = certify_sandwich(args.d, args.t, args.trials, args.seed)
    return report, report.pass_fraction >= 0.95


def _verify_singular(args):
    n = args.d if args.n is None else args.n
    report = singular_value_experiment(n, args.d, args.t, args.trials, args.seed)
    s = report.statistics
    return report, s["violation_rate"] <= s["prob_bound"] + 3 * s["sigma_binomial"]


def _verify_marginal(args):
    report = sphere_marginal_tests(args.d, args.samples, args.cf, args.seed)
    return report, report.pass_fraction == 1.0


def _verify_concentration(args):
    report = sphere_concentration_test(args.d, args.trials, args.seed)
    return report, report.pass_fraction == 1.0


def _verify_comorth(args):
    report = comorth_check(args.d, args.trials, args.seed)
    return report, report.pass_fraction == 1.0


def cmd_verify(args) -> int:
    report, passed = args.verify_fn(args)
    print(report_to_json(report), end="")
    if args.out_csv:
        _write_text(args.out_csv, report_to_csv(report))
    print(
        "%s: %s (pass_fraction = %s)"
        % (report.lemma_id, "PASS" if passed else "FAIL", report.pass_fraction),
        file=sys.stderr,
    )
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# experiment


EXPERIMENT_COLUMNS = ("trial", "seed", "status", "state_bits") + METRIC_COLUMNS
SPEC_KEYS = {"problem", "params", "grid", "trials", "seed", "order"}
STATUS_BY_ERROR = (
    (BudgetViolation, "budget-violation"),
    (DegenerateOutput, "degenerate-output"),
    (NotSeparableInProjection, "not-separable"),
    (AcceptanceTooRare, "acceptance-too-rare"),
)


def _load_spec(path: str) -> dict:
    import json

    try:
        doc = json.loads(_read_text(path))
    except ValueError as exc:
        raise ValidationError("malformed experiment spec: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ValidationError("experiment spec must be a JSON object")
    unknown = set(doc) - SPEC_KEYS
    if unknown:
        raise ValidationError("unknown spec fields: %s" % ", ".join(sorted(unknown)))
    for key in ("problem", "trials", "seed"):
        if key not in doc:
            raise ValidationError("experiment spec missing %r" % key)
    spec = {
        "problem": doc["problem"],
        "params": doc.get("params", {}),
        "grid": doc.get("grid", {}),
        "trials": doc["trials"],
        "seed": doc["seed"],
        "order": doc.get("order", "fixed"),
    }
    if not isinstance(spec["params"], dict) or not isinstance(spec["grid"], dict):
        raise ValidationError("params and grid must be JSON objects")
    if not isinstance(spec["trials"], int) or spec["trials"] < 1:
        raise ValidationError("trials must be a positive integer")
    if not isinstance(spec["seed"], int):
        raise ValidationError("seed must be an integer")
    if spec["order"] not in ("fixed", "shuffled"):
        raise ValidationError("order must be fixed or shuffled")
    overlap = set(spec["params"]) & set(spec["grid"])
    if overlap:
        raise ValidationError(
            "parameters listed both fixed and in grid: %s" % ", ".join(sorted(overlap))
        )
    for key, values in spec["grid"].items():
        if not isinstance(values, list) or not values:
            raise ValidationError("grid entry %r must be a non-empty list" % key)
    return spec


def _derived_seed(seed: int, cell_key: str, trial: int) -> int:
    digest = hashlib.sha256(
        ("%d|%s|%d" % (seed, cell_key, trial)).encode()
    ).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _experiment_cells(spec):
    grid_keys = sorted(spec["grid"])
    for combo in product(*(spec["grid"][k] for k in grid_keys)):
        yield dict(zip(grid_keys, combo))


def _run_experiment_row(spec, cell, cell_key, trial):
    seed = _derived_seed(spec["seed"], cell_key, trial)
    merged = dict(spec["params"])
    merged.update(cell)
    try:
        algorithm = merged.pop("algorithm")
        budget_bits = int(merged.pop("budget_bits"))
    except KeyError as exc:
        raise ValidationError("experiment spec missing %s" % exc) from exc
    merged["seed"] = seed
    row = {c: None for c in EXPERIMENT_COLUMNS}
    row["trial"] = trial
    row["seed"] = seed
    try:
        inst = _generate(spec["problem"], merged)
        report = _run_report(inst, algorithm, budget_bits, seed, spec["order"])
    except NullstreamError as exc:
        for klass, label in STATUS_BY_ERROR:
            if isinstance(exc, klass):
                row["status"] = label
                break
        else:
            if isinstance(exc, ValidationError):
                raise
            row["status"] = "error"
        return row
    row["status"] = "ok"
    row["state_bits"] = report["max_used_bits"]
    for key in METRIC_COLUMNS:
        row[key] = report["metrics"].get(key)
    return row


def _existing_row_keys(path: str, columns) -> set:
    if not os.path.exists(path) or os.path.getsize(path) == 0:
        return set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(columns):
            raise ValidationError("existing %s has different columns" % path)
        key_width = len(columns) - len(EXPERIMENT_COLUMNS) + 1
        return {tuple(line[:key_width]) for line in reader if line}


def cmd_experiment(args) -> int:
    spec = _load_spec(args.spec)
    grid_keys = sorted(spec["grid"])
    columns = tuple(grid_keys) + EXPERIMENT_COLUMNS
    done = _existing_row_keys(args.out, columns)

    pending = []
    for cell in _experiment_cells(spec):
        cell_cells = [csv_cell(cell[k]) for k in grid_keys]
        cell_key = ",".join("%s=%s" % (k, v) for k, v in zip(grid_keys, cell_cells))
        for trial in range(spec["trials"]):
            if tuple(cell_cells + [str(trial)]) not in done:
                pending.append((cell, cell_key, trial, cell_cells))

    threads = os.environ.get("NULLSTREAM_THREADS", "1")
    try:
        threads = max(1, int(threads))
    except ValueError:
        raise ValidationError("NULLSTREAM_THREADS must be an integer")

    def work(item):
        cell, cell_key, trial, _ = item
        return _run_experiment_row(spec, cell, cell_key, trial)

    if threads > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pending))
    else:
        results = [work(item) for item in pending]

    rows = []
    for (cell, _, trial, cell_cells), row in zip(pending, results):
        rows.append(cell_cells + [csv_cell(row[c]) for c in EXPERIMENT_COLUMNS])
    if rows:
        _append_csv_rows(args.out, columns, rows)
    print("%d rows appended to %s" % (len(rows), args.out))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nullstream",
        description="Memory-bounded streaming testbed: generators, budgeted "
        "runs, lemma certificates, experiment sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen_sub = gen.add_subparsers(dest="problem", required=True)

    def gen_common(p, chain=False):
        p.add_argument("--out", required=True, help="output JSON path")
        if chain:
            p.add_argument("--instance", required=True, help="input instance JSON")
        else:
            p.add_argument("--d", type=int, required=True)
        p.set_defaults(func=cmd_gen)

    p = gen_sub.add_parser("anv-gaussian", help="gaussian rows with unit kernel witness")
    gen_common(p)
    p.add_argument("--seed", type=int, required=True)

    p = gen_sub.add_parser(
        "anv-conditioned", help="unit rows whose kernel has first coordinate >= cf"
    )
    gen_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--cf", type=float, default=DEFAULTS.constants.cf)
    p.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)

    p = gen_sub.add_parser("lsp-margin", help="unit points at an exact margin")
    gen_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)

    p = gen_sub.add_parser("lsp-hard", help="separable points from a planted subspace")
    gen_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--cf", type=float, default=DEFAULTS.constants.cf)
    p.add_argument("--c", type=float, default=DEFAULTS.constants.c)
    p.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)

    p = gen_sub.add_parser("lsp-from-anv", help="labeled pairs around kernel rows")
    gen_common(p, chain=True)
    p.add_argument("--c4", type=float, default=DEFAULTS.constants.c4)

    p = gen_sub.add_parser("lr-from-anv", help="equation system hiding one pinned row")
    gen_common(p, chain=True)
    p.add_argument("--seed", type=int, required=True)

    run = sub.add_parser("run", help="run an algorithm under a bit budget")
    run.add_argument("--instance", required=True)
    run.add_argument("--alg", required=True)
    run.add_argument("--budget", type=int, required=True)
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--order", choices=("fixed", "shuffled"), default="fixed")
    run.add_argument("--csv", default=None, help="append a flat row here")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run a lemma certificate")
    verify_sub = verify.add_subparsers(dest="lemma", required=True)

    def verify_common(p, fn, trials_default):
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--trials", type=int, default=trials_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-csv", dest="out_csv", default=None)
        p.set_defaults(func=cmd_verify, verify_fn=fn)

    p = verify_sub.add_parser("no-joint-sol", help="joint eigenvalue certificate")
    verify_common(p, _verify_no_joint_sol, 50)
    p.add_argument("--delta", type=float, default=DEFAULTS.verify.joint_delta)
    p.add_argument("--c-emp", dest="c_emp", type=float, default=DEFAULTS.verify.joint_c_emp)

    p = verify_sub.add_parser("sandwich", help="projector pencil sandwich bounds")
    verify_common(p, _verify_sandwich, 100)
    p.add_argument("--t", type=float, default=DEFAULTS.verify.sandwich_t)

    p = verify_sub.add_parser("singular", help="gaussian singular value bounds")
    verify_common(p, _verify_singular, 1000)
    p.add_argument("--n", type=int, default=None, help="rows (defaults to d)")
    p.add_argument("--t", type=float, default=3.0)

    p = verify_sub.add_parser("marginal", help="first sphere coordinate law")
    verify_common(p, _verify_marginal, 1)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--cf", type=float, default=DEFAULTS.constants.cf)

    p = verify_sub.add_parser("concentration", help="projection norm concentration")
    verify_common(p, _verify_concentration, 10_000)

    p = verify_sub.add_parser("comorth", help="complement distance symmetry")
    verify_common(p, _verify_comorth, 100)

    exp = sub.add_parser("experiment", help="run a parameter-grid sweep to CSV")
    exp.add_argument("--spec", required=True, help="JSON sweep description")
    exp.add_argument("--out", required=True, help="CSV output path")
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AcceptanceTooRare as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except BudgetViolation as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except (DegenerateOutput, NotSeparableInProjection) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 5
    except NullstreamError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
