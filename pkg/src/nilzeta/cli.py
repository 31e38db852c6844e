"""Command-line entry point.

Every subcommand prints one JSON document. Exact quantities are strings;
floating-point values only appear under ``diagnostics`` keys. With
``--output`` the document is also written to a file, and run metadata
(timestamp, argv) goes to a sibling ``.meta.json`` so the primary artifact
stays byte-identical between runs.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

from . import __version__
from .arith import (
    NumberField,
    RayData,
    asymptotics,
    estimate_abscissa_empirical,
    euler_product,
    global_abscissa,
    local_pole_set,
    pole_order,
    rays_from_fit,
    vp_approximation,
)
from .errors import NilzetaError
from .lattice import LieLattice, adapt_basis, exclusion_index, generic_ranks, validate
from .localring import LocalRingSpec, check_spec
from .oracle import DEFAULT_CLASS_CAP, DEFAULT_ORDER_CAP, compare_oracle_poincare, oracle_report
from .poincare import local_zeta
from .zetafit import (
    BivariateRational,
    FitBounds,
    check_functional_equation,
    fit_uniform,
    predict,
    verify_functional_equation,
)

EXIT_ERROR = 2


# --- inputs ----------------------------------------------------------------


def corpus_names() -> list[str]:
    root = resources.files("nilzeta") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_lattice_json(ref: str) -> dict:
    """A file path, or the name of a bundled corpus lattice."""
    path = Path(ref)
    if path.is_file():
        return json.loads(path.read_text(encoding="utf-8"))
    name = ref[:-5] if ref.endswith(".json") else ref
    if name in corpus_names():
        return json.loads((resources.files("nilzeta") / "corpus" / f"{name}.json").read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no lattice file or corpus entry named {ref!r}")


def load(ref: str) -> LieLattice:
    return validate(read_lattice_json(ref))


def _json_arg(text: str) -> Any:
    path = Path(text)
    if path.is_file():
        return json.loads(path.read_text(encoding="utf-8"))
    return json.loads(text)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _ring_spec(args) -> LocalRingSpec:
    g = tuple(_int_list(args.g)) if args.g else None
    if g is None:
        if args.e * args.f != 1:
            raise ValueError("--g is required when e*f > 1")
        g = (0, 1)
    spec = LocalRingSpec(args.p, args.e, args.f, 1, g)
    check_spec(spec)
    return spec


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


# --- subcommands -----------------------------------------------------------


def cmd_validate(args) -> dict:
    lattice = load(args.lattice)
    out: dict[str, Any] = {
        "lattice": lattice.to_dict(),
        "nilpotency_class": lattice.c,
        "lcs_ranks": list(lattice.lcs_ranks),
        "exclusion_index": str(exclusion_index(lattice)),
    }
    if args.p:
        basis = adapt_basis(lattice, args.p)
        out["adapted_basis"] = basis.to_dict()
        out["generic_ranks"] = list(generic_ranks(basis))
    return out


def cmd_local_zeta(args) -> dict:
    series = local_zeta(
        load(args.lattice),
        _ring_spec(args),
        args.n_max,
        N_max=args.N_max,
        workers=args.workers,
        commensurable=args.commensurable,
    )
    return series.to_dict()


def _fit_bounds(args) -> FitBounds:
    return FitBounds(a_max=args.a_max, b_max=args.b_max, max_factors=args.max_factors, deg_max=args.deg_max)


def _series_data(args) -> list[tuple[int, list[int]]]:
    if args.series:
        raw = _json_arg(args.series)
        data = []
        for item in raw:
            coeffs = item["coeffs"]
            if coeffs and isinstance(coeffs[0], list):
                coeffs = [int(c) for _, c in sorted(coeffs, key=lambda t: t[0])]
            data.append((int(item["q"]), [int(c) for c in coeffs]))
        return data
    if not args.lattice:
        raise ValueError("fit needs --series or --lattice")
    lattice = load(args.lattice)
    return [
        (p, local_zeta(lattice, LocalRingSpec(p), args.n_max, workers=args.workers).coeffs)
        for p in _int_list(args.qs)
    ]


def _fit_document(w: BivariateRational) -> dict:
    cert = check_functional_equation(w)
    return {
        "W": w.to_dict(),
        "W_text": str(w.to_sympy()),
        "functional_equation": (
            {**cert.to_dict(), "verified": verify_functional_equation(w, cert)} if cert else None
        ),
    }


def cmd_fit(args) -> dict:
    data = _series_data(args)
    w = fit_uniform(data, _fit_bounds(args))
    out = {"input": [{"q": q, "coeffs": [str(c) for c in cs]} for q, cs in data], **_fit_document(w)}
    if args.predict:
        out["predictions"] = [
            {"q": q, "coeffs": [str(c) for c in predict(w, q, args.predict_n).coeffs]}
            for q in _int_list(args.predict)
        ]
    return out


def _load_fit(ref: str | None) -> BivariateRational | None:
    if not ref:
        return None
    raw = _json_arg(ref)
    return BivariateRational.from_dict(raw.get("W", raw))


def cmd_euler(args) -> dict:
    g = euler_product(
        load(args.lattice),
        NumberField.parse(args.field),
        prime_bound=args.prime_bound,
        N_bound=args.N_bound,
        local_factor=_load_fit(args.fit),
        allow_missing=args.allow_missing,
    )
    return g.to_dict()


def _fraction_list(values) -> list[str]:
    return [str(v) for v in sorted(values)]


def _complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def analyze_document(rays: RayData, w: BivariateRational | None) -> dict:
    poles = local_pole_set(w) if w is not None else {-r.B / r.A for r in rays.rays}
    a, per_term = global_abscissa(rays, poles)
    return {
        "a": str(a),
        "beta": pole_order(rays),
        "P": _fraction_list(poles),
        "max_P": str(max(poles)) if poles else None,
        "strict_gap": bool(not poles or a > max(poles)),
        "per_term": {str(k): str(v) for k, v in per_term.items()},
        "rays": [r.to_dict() for r in rays.rays],
    }


def cmd_analyze(args) -> dict:
    w = _load_fit(args.fit)
    if args.rays:
        rays = RayData.parse(_json_arg(args.rays))
    elif w is not None:
        rays = rays_from_fit(w)
    else:
        raise ValueError("analyze needs --rays or --fit")
    out = analyze_document(rays, w)
    diagnostics: dict[str, Any] = {}
    if args.lattice:
        g = euler_product(load(args.lattice), NumberField.parse(args.field), N_bound=args.N_bound, local_factor=w)
        diagnostics["asymptotics"] = asymptotics(g, Fraction(out["a"]), out["beta"])
        diagnostics["empirical_abscissa"] = estimate_abscissa_empirical(g)
    if args.vp_s:
        primes = [p for p in range(2, args.vp_primes + 1) if all(p % d for d in range(2, int(p**0.5) + 1))]
        vp = vp_approximation(rays, w, primes, [float(s) for s in args.vp_s.split(",")], NumberField.parse(args.field))
        diagnostics["vp_approximation"] = [
            {
                "s": _complex(row["s"]),
                "euler": _complex(row["euler"]),
                "vp_inverse": _complex(row["vp_inverse"]),
                "compensated": _complex(row["compensated"]),
                "final_increment": row["final_increment"],
            }
            for row in vp["table"]
        ]
    if diagnostics:
        out["diagnostics"] = diagnostics
    return out


def cmd_oracle(args) -> dict:
    return oracle_report(load(args.lattice), args.p, args.N, cap=args.cap, class_cap=args.class_cap)


def cmd_compare(args) -> dict:
    return compare_oracle_poincare(
        load(args.lattice),
        args.p,
        args.N,
        n_cap=args.n_cap,
        cap=args.cap,
        class_cap=args.class_cap,
        beyond_rule=args.beyond_rule,
    )


def cmd_report(args) -> dict:
    lattice = load(args.lattice)
    field = NumberField.parse(args.field)
    series = [
        (p, local_zeta(lattice, LocalRingSpec(p), args.n_max, workers=args.workers).coeffs)
        for p in _int_list(args.qs)
    ]
    w = fit_uniform(series, _fit_bounds(args))
    rays = rays_from_fit(w)
    out: dict[str, Any] = {
        "lattice": lattice.to_dict(),
        "field": field.name,
        "local_series": [{"q": q, "coeffs": [str(c) for c in cs]} for q, cs in series],
        **_fit_document(w),
        "analysis": analyze_document(rays, w),
    }
    g = euler_product(lattice, field, N_bound=args.N_bound, local_factor=w)
    out["global_coefficients"] = [str(c) for c in g.coeffs[1 : min(args.N_bound, 50) + 1]]
    if args.N_bound >= 1000:
        a = Fraction(out["analysis"]["a"])
        out["diagnostics"] = {"asymptotics": asymptotics(g, a, out["analysis"]["beta"])}
    return out


# --- parser ----------------------------------------------------------------


def _add_fit_bounds(sp) -> None:
    sp.add_argument("--a-max", type=_positive, default=4)
    sp.add_argument("--b-max", type=_positive, default=6)
    sp.add_argument("--max-factors", type=_positive, default=4)
    sp.add_argument("--deg-max", type=_positive, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nilzeta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=_positive, default=None, help="worker processes (env NILZETA_WORKERS)")
    common.add_argument("--output", "-o", help="also write the JSON document here")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", parents=[common], help="check a lattice and show its adapted basis")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--p", type=_positive)
    sp.set_defaults(run=cmd_validate)

    sp = sub.add_parser("local-zeta", parents=[common], help="truncated local zeta series")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--p", type=_positive, required=True)
    sp.add_argument("--e", type=_positive, default=1)
    sp.add_argument("--f", type=_positive, default=1)
    sp.add_argument("--g", help="monic defining polynomial, coefficients low degree first, e.g. 1,0,1")
    sp.add_argument("--n-max", type=_nonnegative, required=True)
    sp.add_argument("--N-max", type=_positive, default=None)
    sp.add_argument("--commensurable", action="store_true")
    sp.set_defaults(run=cmd_local_zeta)

    sp = sub.add_parser("fit", parents=[common], help="uniform rational fit W(X, Y)")
    sp.add_argument("--series", help="JSON list of {q, coeffs} (file or literal)")
    sp.add_argument("--lattice")
    sp.add_argument("--qs", default="2,3,5,7")
    sp.add_argument("--n-max", type=_nonnegative, default=5)
    sp.add_argument("--predict", help="comma-separated q values")
    sp.add_argument("--predict-n", type=_nonnegative, default=3)
    _add_fit_bounds(sp)
    sp.set_defaults(run=cmd_fit)

    sp = sub.add_parser("euler", parents=[common], help="global coefficients from the fine Euler product")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--field", default="Q")
    sp.add_argument("--N-bound", type=_positive, default=100)
    sp.add_argument("--prime-bound", type=_positive, default=None)
    sp.add_argument("--fit", help="fitted W (file or literal JSON) used at every prime")
    sp.add_argument("--allow-missing", action="store_true")
    sp.set_defaults(run=cmd_euler)

    sp = sub.add_parser("analyze", parents=[common], help="abscissa, pole order and asymptotics")
    sp.add_argument("--rays", help="JSON ray list [[A, B], ...] (file or literal)")
    sp.add_argument("--fit", help="fitted W (file or literal JSON)")
    sp.add_argument("--lattice")
    sp.add_argument("--field", default="Q")
    sp.add_argument("--N-bound", type=_positive, default=10**5)
    sp.add_argument("--vp-s", help="comma-separated real s values for the product diagnostic")
    sp.add_argument("--vp-primes", type=_positive, default=1000)
    sp.set_defaults(run=cmd_analyze)

    for name, run, help_text in (
        ("oracle", cmd_oracle, "character-table twist counts of a finite quotient"),
        ("compare", cmd_compare, "oracle twist counts against the local series"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("--lattice", required=True)
        sp.add_argument("--p", type=_positive, required=True)
        sp.add_argument("--N", type=_positive, default=1)
        sp.add_argument("--cap", type=_positive, default=DEFAULT_ORDER_CAP)
        sp.add_argument("--class-cap", type=_positive, default=DEFAULT_CLASS_CAP)
        if name == "compare":
            sp.add_argument("--n-cap", type=_nonnegative, default=None)
            sp.add_argument("--beyond-rule", action="store_true")
        sp.set_defaults(run=run)

    sp = sub.add_parser("report", parents=[common], help="end-to-end pipeline for one lattice and field")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--field", default="Q")
    sp.add_argument("--qs", default="2,3,5,7")
    sp.add_argument("--n-max", type=_nonnegative, default=5)
    sp.add_argument("--N-bound", type=_positive, default=1000)
    _add_fit_bounds(sp)
    sp.set_defaults(run=cmd_report)
    return parser


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path: str, doc: Any, argv: list[str], status: int) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")
    meta = {
        "argv": argv,
        "exit_status": status,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "workers_env": os.environ.get("NILZETA_WORKERS"),
    }
    Path(path + ".meta.json").write_text(dumps(meta), encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    status = 0
    try:
        doc = args.run(args)
    except NilzetaError as exc:
        doc, status = exc.to_dict(), EXIT_ERROR
    except (ValueError, FileNotFoundError, AssertionError, NotImplementedError) as exc:
        doc, status = {"error": type(exc).__name__, "message": str(exc)}, EXIT_ERROR
    sys.stdout.write(dumps(doc))
    if args.output:
        _write(args.output, doc, argv, status)
    return status
