"""Command-line front end.

    phasepredict <factorize|coeffs|beta|predict|pacf|verify>
                 --config model.json [--oracle] [--out DIR] [--tol TOL]

Config JSON schema:
    {
      "d": 0.3,
      "g": {"q": 2, "entries": [[{"num": [[re, im], ...], "den": [...]}, ...], ...]},
      "n_list": [1, 2, 4],            # horizons (predict/pacf/verify tables)
      "grid": 16384,                   # optional factorization grid override
      "tol": 1e-9,                     # optional engine tolerance
      "window": 256,                   # optional beta dump half-width
      "bound_factor": 1.5              # optional verify verdict threshold
    }

Exit codes: 0 pass, 1 internal error, 2 precondition/validation failure,
3 numerical non-convergence. Tables are CSV (complex cells as "re+imj"),
coefficient dumps are JSON (complex as [re, im]).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .engine import CertificateError, EngineError, PredictorEngine
from .factorize import NonConvergenceError
from .fractional import rho
from .model import FarimaModel
from .oracle import autocov, oracle_solutions
from .phase import beta_from_model, compute_U, compute_V
from .ratmat import ConditionCError, RationalMatrix, spectral_norm

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PRECONDITION = 2
EXIT_NONCONVERGENCE = 3


def _threads_cap() -> None:
    cap = os.environ.get("PHASEPREDICT_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _cfmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def _cjson(arr: np.ndarray):
    arr = np.asarray(arr, dtype=complex)
    return [[[float(c.real), float(c.imag)] for c in row] for row in arr]


def _flat_cells(prefix: str, m: np.ndarray):
    """Column-major flattening of a q x q block into named CSV cells."""
    q = m.shape[0]
    return {f"{prefix}_{a+1}{b+1}": _cfmt(m[a, b]) for b in range(q) for a in range(q)}


def load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if "d" not in cfg or "g" not in cfg:
        raise ValueError("config must provide 'd' and 'g'")
    return cfg


def build_model(cfg: dict) -> FarimaModel:
    g = RationalMatrix.from_json_dict(cfg["g"])
    return FarimaModel.build(float(cfg["d"]), g, grid=cfg.get("grid"),
                             tol=float(cfg.get("factor_tol", 1e-11)))


def _write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        with open(path, "w", newline="") as fh:
            fh.write("")
        return
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, restval="")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def cmd_factorize(cfg: dict, out_dir: str, tol: float) -> int:
    model = build_model(cfg)
    fact = model.fact
    dump = {
        "q": model.q,
        "residual": fact.residual,
        "iterations": fact.iterations,
        "grid_size": fact.grid_size,
        "coeff_tail": fact.coeff_tail,
        "g_tilde_coeffs": [_cjson(c) for c in fact.g_tilde_coeffs.coeffs],
        "g_sharp_coeffs": [_cjson(c) for c in fact.g_sharp_coeffs.coeffs],
        "U": _cjson(model.U),
    }
    path = os.path.join(out_dir, "factorization.json")
    with open(path, "w") as fh:
        json.dump(dump, fh, indent=1)
    print(f"factorize: residual={fact.residual:.3e} iters={fact.iterations} "
          f"grid={fact.grid_size} -> {path}")
    return EXIT_OK


def cmd_coeffs(cfg: dict, out_dir: str, tol: float) -> int:
    model = build_model(cfg)
    K = int(cfg.get("K", 64))
    dump = {
        "d": model.d,
        "q": model.q,
        "c": [_cjson(c) for c in model.ma_coeffs(K).coeffs],
        "c_tilde": [_cjson(c) for c in model.ma_coeffs_backward(K).coeffs],
        "a": [_cjson(c) for c in model.ar_coeffs(K).coeffs],
        "a_tilde": [_cjson(c) for c in model.ar_coeffs_backward(K).coeffs],
        "phi": [_cjson(c) for c in model.infinite_predictor_coeffs(K)[0].coeffs],
        "phi_tilde": [_cjson(c) for c in model.infinite_predictor_coeffs(K)[1].coeffs],
    }
    path = os.path.join(out_dir, "coeffs.json")
    with open(path, "w") as fh:
        json.dump(dump, fh, indent=1)
    print(f"coeffs: K={K} -> {path}")
    return EXIT_OK


def cmd_beta(cfg: dict, out_dir: str, tol: float) -> int:
    model = build_model(cfg)
    W = int(cfg.get("window", 256))
    seq = beta_from_model(model, (-W, W))
    rows = []
    for i, n in enumerate(range(-W, W + 1)):
        row = {"n": n, "rho_n": f"{rho(model.d, n):.17g}"}
        row.update(_flat_cells("beta", seq.values[i]))
        rows.append(row)
    path = os.path.join(out_dir, "beta.csv")
    _write_csv(path, rows)
    print(f"beta: window +-{W} tail_bound={seq.tail_bound:.3e} -> {path}")
    return EXIT_OK


def _solution_rows(model, sols, with_oracle: bool, n_list):
    rows = []
    orc = oracle_solutions(model, n_list) if with_oracle else {}
    for n in sorted(sols):
        s = sols[n]
        row = {"n": n, "provenance": "engine"}
        row.update(_flat_cells("v", s.v))
        row.update(_flat_cells("v_tilde", s.v_tilde))
        row.update(_flat_cells("alpha", s.alpha))
        for j in range(1, n + 1):
            row.update(_flat_cells(f"phi_{n}_{j}", s.phi[j - 1]))
        row["certificate"] = f"{s.diagnostics.get('tail_certificate', 0.0):.3e}"
        if with_oracle:
            o = orc[n]
            diff = max(
                np.abs(s.v - o.v).max(),
                np.abs(s.v_tilde - o.v_tilde).max(),
                np.abs(s.alpha - o.alpha).max(),
                np.abs(s.phi - o.phi).max(),
                np.abs(s.phi_tilde - o.phi_tilde).max(),
            )
            row["oracle_provenance"] = "oracle"
            row.update(_flat_cells("oracle_v", o.v))
            row.update(_flat_cells("oracle_alpha", o.alpha))
            row["max_abs_diff"] = f"{diff:.3e}"
        rows.append(row)
    return rows


def cmd_predict(cfg: dict, out_dir: str, tol: float, with_oracle: bool) -> int:
    model = build_model(cfg)
    n_list = [int(n) for n in cfg.get("n_list", [])]
    path = os.path.join(out_dir, "predict.csv")
    if not n_list:
        with open(path, "w", newline="") as fh:
            fh.write("n,provenance\n")
        print(f"predict: empty n_list -> {path}")
        return EXIT_OK
    engine = PredictorEngine(model, tol=tol)
    sols = engine.solve(n_list)
    rows = _solution_rows(model, sols, with_oracle, n_list)
    _write_csv(path, rows)
    print(f"predict: {len(rows)} horizons -> {path}")
    if with_oracle:
        worst = max(float(r["max_abs_diff"]) for r in rows)
        print(f"predict: max |engine - oracle| = {worst:.3e}")
    return EXIT_OK


def cmd_pacf(cfg: dict, out_dir: str, tol: float, with_oracle: bool) -> int:
    model = build_model(cfg)
    n_list = [int(n) for n in cfg.get("n_list", [])]
    path = os.path.join(out_dir, "pacf.csv")
    if not n_list:
        with open(path, "w", newline="") as fh:
            fh.write("n,provenance\n")
        return EXIT_OK
    engine = PredictorEngine(model, tol=tol)
    sols = engine.solve(n_list, want_phi=False)
    orc = oracle_solutions(model, n_list) if with_oracle else {}
    rows = []
    for n in sorted(sols):
        s = sols[n]
        row = {"n": n, "provenance": "engine",
               "alpha_norm": f"{spectral_norm(s.alpha):.17g}"}
        row.update(_flat_cells("alpha", s.alpha))
        row.update(_flat_cells("phi_nn", s.phi_nn))
        row["certificate"] = f"{s.diagnostics.get('tail_certificate', 0.0):.3e}"
        if with_oracle:
            row["max_abs_diff"] = f"{np.abs(s.alpha - orc[n].alpha).max():.3e}"
        rows.append(row)
    _write_csv(path, rows)
    print(f"pacf: {len(rows)} horizons -> {path}")
    return EXIT_OK


def _bounded_verdict(values: list[float], n_list: list[int], factor: float) -> bool:
    """Running max over the upper half must not exceed factor x median-n value."""
    if len(values) < 2:
        return True
    mid = len(values) // 2
    ref = values[mid]
    if ref <= 0:
        ref = max(values) * 1e-12 + 1e-300
    return max(values[mid:]) <= factor * ref


def cmd_verify(cfg: dict, out_dir: str, tol: float, claim: str) -> int:
    model = build_model(cfg)
    n_list = sorted(int(n) for n in cfg.get("n_list", [8, 16, 32, 64, 128, 256]))
    factor = float(cfg.get("bound_factor", 1.5))
    engine = PredictorEngine(model, tol=tol)
    if claim == "baxter":
        if model.d <= 0:
            print("verify baxter: requires 0 < d < 1/2", file=sys.stderr)
            return EXIT_PRECONDITION
        rows = engine.baxter_report(n_list)
        monitored = [r["ratio"] for r in rows]
        mon_b = [r["ratio_backward"] for r in rows]
        ok = _bounded_verdict(monitored, n_list, factor) and \
            _bounded_verdict(mon_b, n_list, factor)
        out_rows = [{k: (f"{v:.12g}" if isinstance(v, float) else v)
                     for k, v in r.items()} for r in rows]
        path = os.path.join(out_dir, "verify_baxter.csv")
    elif claim in ("v-asymp", "pacf-asymp"):
        rows = engine.asymptotics_report(n_list)
        key = "v_resid" if claim == "v-asymp" else "alpha_resid"
        key2 = "v_tilde_resid" if claim == "v-asymp" else "phi_nn_resid"
        ok = _bounded_verdict([r[key] for r in rows], n_list, factor) and \
            _bounded_verdict([r[key2] for r in rows], n_list, factor)
        out_rows = [{k: (f"{v:.12g}" if isinstance(v, float) else v)
                     for k, v in r.items()} for r in rows]
        path = os.path.join(out_dir, f"verify_{claim}.csv")
    else:
        print(f"unknown claim {claim!r}", file=sys.stderr)
        return EXIT_PRECONDITION
    _write_csv(path, out_rows)
    verdict = "pass" if ok else "FAIL"
    print(f"verify {claim}: {verdict} (bound factor {factor}) -> {path}")
    return EXIT_OK if ok else EXIT_PRECONDITION


def main(argv=None) -> int:
    _threads_cap()
    ap = argparse.ArgumentParser(
        prog="phasepredict",
        description="Finite predictor coefficients, error covariances and PACF "
                    "of multivariate FARIMA processes.",
    )
    ap.add_argument("command",
                    choices=["factorize", "coeffs", "beta", "predict", "pacf", "verify"])
    ap.add_argument("claim", nargs="?", default=None,
                    help="for verify: baxter | v-asymp | pacf-asymp")
    ap.add_argument("--config", required=True)
    ap.add_argument("--oracle", action="store_true",
                    help="add oracle columns and max-abs-diff")
    ap.add_argument("--out", default=".")
    ap.add_argument("--tol", type=float, default=None)
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    os.makedirs(args.out, exist_ok=True)
    tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-9))

    try:
        if args.command == "factorize":
            return cmd_factorize(cfg, args.out, tol)
        if args.command == "coeffs":
            return cmd_coeffs(cfg, args.out, tol)
        if args.command == "beta":
            return cmd_beta(cfg, args.out, tol)
        if args.command == "predict":
            return cmd_predict(cfg, args.out, tol, args.oracle)
        if args.command == "pacf":
            return cmd_pacf(cfg, args.out, tol, args.oracle)
        if args.command == "verify":
            if args.claim is None:
                print("verify needs a claim: baxter | v-asymp | pacf-asymp",
                      file=sys.stderr)
                return EXIT_PRECONDITION
            return cmd_verify(cfg, args.out, tol, args.claim)
    except (ConditionCError, ValueError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NonConvergenceError, CertificateError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except EngineError as exc:
        print(f"engine failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
