"""Command line front end: config validation, CSV I/O, experiment dispatch.

Every command resolves its config (defaults, then the --config file, then
the --seed flag), validates it against a published JSON schema, runs one of
the engines in experiments.py, and writes its tables as CSV plus a JSON run
record carrying the command name, seed, config hash and package version.
Outputs contain no timestamps, so a rerun with the same config and seed is
byte-identical. Exit codes: 0 success, 1 a validation or analysis failure,
2 a usage or I/O error.
"""

import argparse
import csv
import hashlib
import json
import os
import sys

import jsonschema
import numpy as np

from . import __version__
from . import experiments as ex
from .errors import AqrError, ParseError
from .families import WeightFamily
from .kernel_cde import Dataset, rule_bandwidth
from .distributed import ShardPlan, local_init, partition, run_distributed
from .portfolio import ReturnsMatrix
from .sample_risk import aqr_sample, risk_sample
from .single_index import fit_full, normalize_beta

_TAU_ITEM = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_TAU_LIST = {"type": "array", "items": _TAU_ITEM, "minItems": 1}
_FAMILY = {
    "type": "object",
    "properties": {"kind": {"type": "string"}, "a": {"type": "number"},
                   "schedule": {"type": "string"}},
    "required": ["kind"],
    "additionalProperties": False,
}
_SEED = {"type": "integer", "minimum": 0}

SCHEMAS = {
    "validate": {
        "type": "object",
        "properties": {
            "violators": {"type": "array", "items": {"type": "string"}},
        },
        "additionalProperties": False,
    },
    "compare": {
        "type": "object",
        "properties": {"taus": _TAU_LIST},
        "additionalProperties": False,
    },
    "sim1": {
        "type": "object",
        "properties": {
            "seed": _SEED,
            "preset": {"enum": ["desk", "paper"]},
            "reps": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 20},
            "taus": _TAU_LIST,
        },
        "additionalProperties": False,
    },
    "sim2": {
        "type": "object",
        "properties": {
            "seed": _SEED,
            "preset": {"enum": ["desk", "paper"]},
            "reps": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 20},
            "K": {"type": "integer", "minimum": 1},
            "taus": _TAU_LIST,
        },
        "additionalProperties": False,
    },
    "portfolio": {
        "type": "object",
        "properties": {
            "family": _FAMILY,
            "tau": _TAU_ITEM,
            "starts": {"type": "integer", "minimum": 1},
            "iterations": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "mode": {"enum": ["normalized", "raw"]},
        },
        "additionalProperties": False,
    },
    "airquality": {
        "type": "object",
        "properties": {
            "taus": _TAU_LIST,
            "winter": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "fit": {
        "type": "object",
        "properties": {
            "bandwidth": {"type": "number", "exclusiveMinimum": 0},
            "rate_exponent": {"type": "number", "exclusiveMinimum": 0,
                              "exclusiveMaximum": 0.5},
        },
        "additionalProperties": False,
    },
    "dist-fit": {
        "type": "object",
        "properties": {
            "K": {"type": "integer", "minimum": 1},
            "sizes": {"type": "array",
                      "items": {"type": "integer", "minimum": 2},
                      "minItems": 1},
            "rounds": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "rate_exponent": {"type": "number", "exclusiveMinimum": 0,
                              "exclusiveMaximum": 0.5},
        },
        "additionalProperties": False,
    },
    "risk": {
        "type": "object",
        "properties": {
            "family": _FAMILY,
            "tau": _TAU_ITEM,
            "mode": {"enum": ["normalized", "raw"]},
        },
        "additionalProperties": False,
    },
}

DEFAULTS = {
    "validate": {"violators": []},
    "compare": {"taus": [round(0.90 + 0.01 * i, 2) for i in range(9)]},
    "sim1": {"seed": 1, "preset": "desk", "n": 300,
             "taus": [0.05, 0.1, 0.9, 0.95]},
    "sim2": {"seed": 1, "preset": "desk", "n": 500, "K": 10,
             "taus": [0.1, 0.9]},
    "portfolio": {"family": {"kind": "es"}, "tau": 0.05, "starts": 20,
                  "iterations": 2000, "seed": 0, "mode": "normalized"},
    "airquality": {"taus": list(ex.AIRQ_TAUS), "winter": True},
    "fit": {"rate_exponent": 0.15},
    "dist-fit": {"K": 2, "rounds": None, "seed": 0, "rate_exponent": 0.15},
    "risk": {"family": {"kind": "es"}, "tau": 0.05, "mode": "normalized"},
}

PRESET_REPS = {
    "sim1": {"desk": 100, "paper": 500},
    "sim2": {"desk": 30, "paper": 100},
}


def config_schema(command):
    """The published JSON schema for one subcommand's config file."""
    return SCHEMAS[command]


def _resolve_config(args):
    command = args.command
    config = dict(DEFAULTS[command])
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
        jsonschema.validate(user, SCHEMAS[command])
        config.update(user)
    if command in PRESET_REPS and "reps" not in config:
        config["reps"] = PRESET_REPS[command][config["preset"]]
    if args.seed is not None and "seed" in config:
        config["seed"] = args.seed
    return config


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return value


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_run(args, config, report, outputs):
    blob = json.dumps(config, sort_keys=True, default=_json_default)
    record = {
        "command": args.command,
        "config": config,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": config.get("seed"),
        "version": __version__,
        "outputs": sorted(outputs),
        "report": report,
    }
    path = os.path.join(args.out, f"{args.command.replace('-', '_')}_run.json")
    _write_json(path, record)


# ---------------------------------------------------------------------------
# CSV readers

def _read_matrix_csv(path):
    """Numeric matrix with one header row; returns (header, array)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise ParseError("empty CSV", row=1) from None
        rows = []
        for i, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(rec)}", row=i)
            vals = []
            for j, cell in enumerate(rec, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric value {cell.strip()!r}",
                                     row=i, col=j) from None
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", row=2)
    return header, np.array(rows)


def _read_returns_csv(path):
    header, table = _read_matrix_csv(path)
    return ReturnsMatrix(table, labels=header)


def _read_column_csv(path):
    """One value per line; a single non-numeric first line is a header."""
    values = []
    with open(path, newline="") as fh:
        for i, rec in enumerate(csv.reader(fh), start=1):
            if not rec:
                continue
            if len(rec) != 1:
                raise ParseError(f"expected 1 field, got {len(rec)}", row=i)
            try:
                values.append(float(rec[0]))
            except ValueError:
                if i == 1:
                    continue
                raise ParseError(f"non-numeric value {rec[0].strip()!r}",
                                 row=i, col=1) from None
    if not values:
        raise ParseError("no data rows", row=1)
    return np.array(values)


# ---------------------------------------------------------------------------
# command handlers; each returns (exit_code, report, extra output names)

def _cmd_validate(args, config):
    report = ex.run_validate(violators=config["violators"])
    return (0 if report["all_passed"] else 1), report, []


def _cmd_compare(args, config):
    out = ex.run_compare(taus=config["taus"])
    name = "compare.csv"
    _write_csv(os.path.join(args.out, name),
               ["distribution", "domain", "family", "tau", "value",
                "quantile", "limit_ratio"],
               [[r["distribution"], r["domain"], r["family"], r["tau"],
                 r["value"], r["quantile"], r["limit_ratio"]]
                for r in out["rows"]])
    report = {"rows": len(out["rows"]), "violations": out["violations"]}
    return (0 if not out["violations"] else 1), report, [name]


def _cmd_sim1(args, config):
    out = ex.run_sim1(master_seed=config["seed"], reps=config["reps"],
                      n=config["n"], taus=config["taus"],
                      threads=args.threads)
    name = "sim1.csv"
    _write_csv(os.path.join(args.out, name),
               ["error", "family", "tau", "x0", "truth", "mean_rpad",
                "sd_rpad"],
               [[c["error"], c["family"], c["tau"], c["x0"], c["truth"],
                 c["mean_rpad"], c["sd_rpad"]] for c in out["cells"]])
    report = {"n": out["n"], "reps": out["reps"],
              "worst_mean_rpad": max(c["mean_rpad"] for c in out["cells"])}
    return 0, report, [name]


def _cmd_sim2(args, config):
    out = ex.run_sim2(master_seed=config["seed"], reps=config["reps"],
                      n=config["n"], K=config["K"], taus=config["taus"],
                      threads=args.threads)
    aae_name, rpad_name = "sim2_aae.csv", "sim2_rpad.csv"
    _write_csv(os.path.join(args.out, aae_name),
               ["method", "mean_aae", "sd_aae"],
               [[m, out["aae"][m]["mean"], out["aae"][m]["sd"]]
                for m in ("all", "de", "pilot")])
    _write_csv(os.path.join(args.out, rpad_name),
               ["family", "tau", "method", "truth", "mean_rpad", "sd_rpad"],
               [[r["family"], r["tau"], r["method"], r["truth"],
                 r["mean_rpad"], r["sd_rpad"]] for r in out["rpad"]])
    report = {k: out[k] for k in ("n", "K", "reps", "aae", "rounds")}
    if "k1_newton_path_gap" in out:
        report["k1_newton_path_gap"] = out["k1_newton_path_gap"]
    return 0, report, [aae_name, rpad_name]


def _cmd_portfolio(args, config):
    fit_returns = _read_returns_csv(args.fit_csv)
    test_returns = _read_returns_csv(args.test_csv)
    bench = _read_column_csv(args.bench_csv)
    family = WeightFamily.from_json(config["family"])
    report = ex.run_portfolio(fit_returns, test_returns, bench, family,
                              config["tau"], starts=config["starts"],
                              iterations=config["iterations"],
                              seed=config["seed"], mode=config["mode"])
    name = "portfolio.json"
    _write_json(os.path.join(args.out, name),
                {k: report[k] for k in ("alpha", "risk", "SR", "PD")})
    return 0, report, [name]


def _cmd_airquality(args, config):
    y, X, shard_of, sites = ex.load_airquality(args.data_csv,
                                               winter=config["winter"])
    report = ex.run_airquality(y, X, shard_of, sites, taus=config["taus"])
    header = ["family"] + [f"tau_{t:g}" for t in report["taus"]]
    names = []
    for tag in ("full", "distributed", "deviation"):
        name = f"airquality_{tag}.csv"
        _write_csv(os.path.join(args.out, name), header,
                   [[row["family"]] + row["values"] for row in report[tag]])
        names.append(name)
    return 0, report, names


def _load_xy_csv(path):
    header, table = _read_matrix_csv(path)
    if table.shape[1] < 2:
        raise ParseError("need a response column plus at least one covariate",
                         row=1)
    return header, Dataset(table[:, 0], table[:, 1:])


def _cmd_fit(args, config):
    header, data = _load_xy_csv(args.data_csv)
    init = normalize_beta(np.ones(data.p))
    if "bandwidth" in config:
        h = config["bandwidth"]
    else:
        h = rule_bandwidth(data.X @ init, config["rate_exponent"])
    model = fit_full(data, h, init)
    report = dict(model.to_json())
    report["covariates"] = header[1:]
    report["response"] = header[0]
    name = "fit.json"
    _write_json(os.path.join(args.out, name), report)
    return 0, report, [name]


def _cmd_dist_fit(args, config):
    header, data = _load_xy_csv(args.data_csv)
    if "sizes" in config and config["sizes"] is not None:
        sizes = tuple(config["sizes"])
    else:
        base, extra = divmod(data.n, config["K"])
        sizes = tuple(base + (1 if k < extra else 0)
                      for k in range(config["K"]))
    plan = ShardPlan(len(sizes), sizes)
    pdata = partition(data, plan, seed=config["seed"])
    init = normalize_beta(np.ones(data.p))
    exponent = config["rate_exponent"]
    h1 = rule_bandwidth(pdata.X[pdata.shard_of == plan.central] @ init,
                        exponent)
    beta0 = local_init(pdata, plan, h1)
    h = rule_bandwidth(pdata.X @ beta0, exponent)
    model, comm = run_distributed(pdata, plan, config["rounds"], h, h1)
    report = dict(model.to_json())
    report.update({"h1": h1.h, "K": plan.K, "sizes": list(plan.sizes),
                   "rounds": len(comm.rounds), "comm": comm.to_json(),
                   "covariates": header[1:], "response": header[0]})
    name = "dist_fit.json"
    _write_json(os.path.join(args.out, name), report)
    return 0, report, [name]


def _cmd_risk(args, config):
    values = _read_column_csv(args.data_csv)
    family = WeightFamily.from_json(config["family"])
    report = {
        "risk": risk_sample(values, family, config["tau"],
                            mode=config["mode"]),
        "value": aqr_sample(values, family, config["tau"],
                            mode=config["mode"]),
        "n": int(values.size),
        "family": family.label(),
        "tau": config["tau"],
        "mode": config["mode"],
    }
    name = "risk.json"
    _write_json(os.path.join(args.out, name), report)
    return 0, report, [name]


_HANDLERS = {
    "validate": _cmd_validate,
    "compare": _cmd_compare,
    "sim1": _cmd_sim1,
    "sim2": _cmd_sim2,
    "portfolio": _cmd_portfolio,
    "airquality": _cmd_airquality,
    "fit": _cmd_fit,
    "dist-fit": _cmd_dist_fit,
    "risk": _cmd_risk,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aqr",
        description="Quantile-weighted regression functionals and risk "
                    "measures: validation suites, simulation studies, and "
                    "fitting tools.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--config", metavar="PATH",
                       help="JSON config file (schema-checked)")
        q.add_argument("--seed", metavar="U64", type=int,
                       help="override the config seed")
        q.add_argument("--out", metavar="DIR", default=".",
                       help="output directory (must exist)")
        q.add_argument("--threads", metavar="N", type=int, default=1,
                       help="worker processes for replicated runs")
        return q

    add("validate", "check the weight-family axioms on the built-in roster")
    add("compare", "population risk table across six distributions")
    add("sim1", "replicated one-covariate estimation study")
    add("sim2", "replicated pooled-versus-distributed index study")
    q = add("portfolio", "optimize weights on a fit window, score on a test "
                         "window")
    q.add_argument("fit_csv", help="asset returns for the fit window")
    q.add_argument("test_csv", help="asset returns for the test window")
    q.add_argument("bench_csv", help="single-column benchmark returns")
    q = add("airquality", "site-sharded index study of a pollution table")
    q.add_argument("data_csv", help="hourly or daily site records")
    q = add("fit", "fit the index model to a response-plus-covariates CSV")
    q.add_argument("data_csv", help="first column response, rest covariates")
    q = add("dist-fit", "sharded fit of the index model")
    q.add_argument("data_csv", help="first column response, rest covariates")
    q = add("risk", "sample risk of a single return column")
    q.add_argument("data_csv", help="single-column values")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
    except ParseError as exc:
        print(f"aqr {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError,
            jsonschema.ValidationError, AqrError) as exc:
        print(f"aqr {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    try:
        code, report, outputs = _HANDLERS[args.command](args, config)
        _write_run(args, config, report, outputs)
    except ParseError as exc:
        where = f" (row {exc.row}" + (f", col {exc.col})" if exc.col
                                      else ")")
        print(f"aqr {args.command}: parse error: {exc}{where}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"aqr {args.command}: i/o error: {exc}", file=sys.stderr)
        return 2
    except AqrError as exc:
        print(f"aqr {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
