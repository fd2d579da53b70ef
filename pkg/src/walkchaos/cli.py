"""Command-line front end: simulation, figure export, verification, and
Bessel tabulation driven by one JSON config.

Every flag overrides a single config key (defaults < config file < flags),
so a bare `walkchaos figure` reproduces the default four-heatmap run and
`walkchaos verify` executes the full acceptance suite. Outputs are
namespaced per command under the output directory with deterministic names;
the same seed always yields byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .acceptance import SUITES, AcceptanceConfig, run_suite
from .bessel import l1_limit_check, sample_besq0, transition_density
from .chaos import build_mu, render_heatmap, write_chaos_csv, write_chaos_summary
from .geometry import DomainSpec, Point2, Rectangle
from .verify import derived_rng, suite_exit_code
from .walk import (
    LatticeConfig,
    RunSeed,
    cfg_from_dict,
    cfg_to_dict,
    domain_from_dict,
    domain_to_dict,
    run_killed_walk,
    write_occupation_field,
)

_DEFAULT_GAMMAS = (0.3, 0.8, 1.3, 1.8)
_DEFAULT_LADDER = (math.exp(-3.0), math.exp(-4.0), math.exp(-5.0))


@dataclass(frozen=True)
class RunConfig:
    """One experiment description: what to walk, at which scales, and where
    outputs land. The defaults are the four-heatmap lattice run."""

    domain: DomainSpec = Rectangle(Point2(0.0, 0.0), 1.0, 1.0, Point2(0.5, 0.5))
    lattice: LatticeConfig = LatticeConfig(h=1.0 / 400.0)
    gammas: tuple[float, ...] = _DEFAULT_GAMMAS
    eps_ladder: tuple[float, ...] = _DEFAULT_LADDER
    replicas: int = 1
    master_seed: int = 20260823
    out_dir: str = "walkchaos-out"
    suite: str = "all"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not self.gammas:
            raise ValueError("need at least one gamma")
        if any(not 0.0 < g < 2.0 for g in self.gammas):
            raise ValueError("gamma values must lie in (0, 2)")
        if any(not 0.0 < e < 1.0 for e in self.eps_ladder):
            raise ValueError("eps ladder values must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.eps_ladder, self.eps_ladder[1:])):
            pass  # descending is the convention but not a hard requirement
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; one of {sorted(SUITES)}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")

    @property
    def figure_eps(self) -> float:
        """Scale used for weight fields in the figure command: the middle
        ladder rung (e^-4 on the default ladder)."""
        return self.eps_ladder[len(self.eps_ladder) // 2]


def emit_config(cfg: RunConfig) -> dict:
    return {
        "domain": domain_to_dict(cfg.domain),
        "lattice": cfg_to_dict(cfg.lattice),
        "gammas": list(cfg.gammas),
        "eps_ladder": list(cfg.eps_ladder),
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "out_dir": cfg.out_dir,
        "suite": cfg.suite,
        "workers": cfg.workers,
    }


def parse_config(data: dict) -> RunConfig:
    base = RunConfig()
    unknown = set(data) - set(emit_config(base))
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(
        domain=domain_from_dict(data["domain"]) if "domain" in data else base.domain,
        lattice=cfg_from_dict(data["lattice"]) if "lattice" in data else base.lattice,
        gammas=tuple(float(g) for g in data.get("gammas", base.gammas)),
        eps_ladder=tuple(float(e) for e in data.get("eps_ladder", base.eps_ladder)),
        replicas=int(data.get("replicas", base.replicas)),
        master_seed=int(data.get("master_seed", base.master_seed)),
        out_dir=str(data.get("out_dir", base.out_dir)),
        suite=str(data.get("suite", base.suite)),
        workers=int(data.get("workers", base.workers)),
    )


def load_config(path: str | Path | None, overrides: dict) -> RunConfig:
    """Config file (if any) overlaid with CLI flag values."""
    data = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(data)


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir) / "simulate"
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.replicas):
        field = run_killed_walk(cfg.domain, cfg.lattice, RunSeed(cfg.master_seed, i))
        write_occupation_field(field, out / f"field-{i:05d}.occf")
    print(f"wrote {cfg.replicas} occupation field(s) to {out}")
    return 0


def cmd_figure(cfg: RunConfig, eps: float | None = None) -> int:
    out = Path(cfg.out_dir) / "figure"
    out.mkdir(parents=True, exist_ok=True)
    eps = cfg.figure_eps if eps is None else eps
    field = run_killed_walk(cfg.domain, cfg.lattice, RunSeed(cfg.master_seed, 0))
    for g in cfg.gammas:
        chaos = build_mu(field, g, eps, None, cfg.lattice)
        stem = f"heatmap-gamma-{g:g}"
        render_heatmap(chaos, out / f"{stem}.ppm")
        write_chaos_csv(chaos, out / f"{stem}.csv")
        write_chaos_summary(chaos, field, out / f"{stem}-summary.json")
    print(f"wrote {len(cfg.gammas)} heatmap(s) at eps={eps:g} to {out}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir) / "verify"
    acfg = AcceptanceConfig(master_seed=cfg.master_seed, workers=cfg.workers)
    reports = run_suite(acfg, suite=cfg.suite, out_dir=out)
    for r in reports:
        print(f"{r.check_id:28s} {r.status:14s} {r.runtime_s:8.1f}s")
    code = suite_exit_code(reports)
    print(f"suite {cfg.suite!r}: {len(reports)} check(s), exit {code}; report in {out}")
    return code


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_bessel(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = Path(cfg.out_dir) / "bessel"
    out.mkdir(parents=True, exist_ok=True)
    if args.bessel_cmd == "density":
        r, s = args.r, args.s
        y_hi = args.y_max if args.y_max is not None else r + 8.0 * math.sqrt(s)
        n = args.points
        rows = []
        for k in range(1, n + 1):
            y = y_hi * k / n
            rows.append((y, transition_density(r, s, y)))
        path = out / f"density-r{r:g}-s{s:g}.csv"
        _write_csv(path, "y,density", rows)
    elif args.bessel_cmd == "l1":
        ts = tuple(float(t) for t in args.t.split(","))
        ratios = l1_limit_check(args.r, args.gamma, args.b, ts)
        rows = list(zip(ts, ratios))
        path = out / f"l1-r{args.r:g}-gamma{args.gamma:g}-b{args.b:g}.csv"
        _write_csv(path, "t,ratio", rows)
        for t, ratio in rows:
            print(f"t={t:g}: ratio {ratio:.6f}")
    else:  # sample
        rng = derived_rng(cfg.master_seed, "cli-bessel-sample")
        draws = sample_besq0(args.x0, args.s, rng, size=args.n)
        path = out / f"sample-x0{args.x0:g}-s{args.s:g}.csv"
        _write_csv(path, "value", ((v,) for v in draws))
    print(f"wrote {path}")
    return 0


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="walkchaos",
        description="Lattice walk simulation, measure heatmaps, and the verification suite.",
        # abbreviations off: sub flags like --s would otherwise collide
        # with --seed/--suite during top-level token classification
        allow_abbrev=False,
    )
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed override")
    p.add_argument("--replicas", type=int, metavar="N", help="replica count override")
    p.add_argument("--out", metavar="DIR", help="output directory override")
    p.add_argument("--workers", type=int, metavar="N", help="worker count override")
    p.add_argument("--suite", metavar="NAME", help="verification suite selection")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="run replica walks, write occupation fields")

    fig = sub.add_parser("figure", help="render weight heatmaps from one walk")
    fig.add_argument("--gamma", type=float, help="render a single gamma instead of the list")
    fig.add_argument("--eps", type=float, help="weight-field scale (default: middle ladder rung)")

    sub.add_parser("verify", help="run the acceptance suite, exit nonzero on failure")

    bes = sub.add_parser("bessel", help="tabulate densities, limits, or draws to CSV")
    bsub = bes.add_subparsers(dest="bessel_cmd", required=True)
    dens = bsub.add_parser("density", help="transition density on a value grid")
    dens.add_argument("--r", type=float, required=True)
    dens.add_argument("--s", type=float, required=True)
    dens.add_argument("--y-max", type=float, default=None)
    dens.add_argument("--points", type=int, default=200)
    l1 = bsub.add_parser("l1", help="normalized tail ratios over a t list")
    l1.add_argument("--r", type=float, required=True)
    l1.add_argument("--gamma", type=float, required=True)
    l1.add_argument("--b", type=float, default=0.0)
    l1.add_argument("--t", default="10,20,40", help="comma-separated t values")
    samp = bsub.add_parser("sample", help="exact draws of the squared process")
    samp.add_argument("--x0", type=float, required=True)
    samp.add_argument("--s", type=float, default=1.0)
    samp.add_argument("--n", type=int, default=1000)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "master_seed": args.seed,
        "replicas": args.replicas,
        "out_dir": args.out,
        "workers": args.workers,
        "suite": args.suite,
    }
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "figure" and args.gamma is not None:
            cfg = replace(cfg, gammas=(args.gamma,))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2

    if args.command == "simulate":
        return cmd_simulate(cfg)
    if args.command == "figure":
        return cmd_figure(cfg, eps=args.eps)
    if args.command == "verify":
        return cmd_verify(cfg)
    return cmd_bessel(cfg, args)


if __name__ == "__main__":
    raise SystemExit(main())
