"""Command line front end wiring mesh generation, model build, point solves,
parameter sweeps, analytic tables, and report emission.

Every command is deterministic for a fixed configuration and seed; all file
outputs start with a comment line carrying the tool version and a hash of the
effective configuration.  Exit codes: 0 success, 2 invalid input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy.linalg as la

from . import __version__, analytic, fem, mesh as meshmod, rom, slowfast
from .decomposition import Decomposition
from .errors import InvalidInputError, NumericalError

_SOURCES = {
    "x2": lambda x1, x2: x2,
    "sin_pi_x2": lambda x1, x2: np.sin(np.pi * x2),
}


@dataclass
class RunConfig:
    geometry: str = "square"          # square | crown | profile file path
    n_layers: int = 3
    target_h: float = 1.0 / 32.0
    source: str = "x2"                # named source or expression in x1, x2
    rank_policy: str = "threshold"    # threshold | fixed | list
    threshold: float = 1e-7
    fixed_rank: int = 3
    rank_list: tuple[int, ...] = ()
    param_low: float = 1.0
    param_high: float = 10.0
    n_samples: int = 100
    seed: int = 2024
    output: str = "out"

    def validate(self) -> "RunConfig":
        if self.n_layers < 2:
            raise InvalidInputError("n_layers must be >= 2")
        if self.target_h <= 0:
            raise InvalidInputError("target_h must be positive")
        if self.rank_policy not in ("threshold", "fixed", "list"):
            raise InvalidInputError("rank_policy must be threshold, fixed, or list")
        if self.rank_policy == "threshold" and self.threshold <= 0:
            raise InvalidInputError("threshold must be positive")
        if self.rank_policy == "fixed" and self.fixed_rank < 0:
            raise InvalidInputError("fixed_rank must be >= 0")
        if self.rank_policy == "list" and len(self.rank_list) != self.n_layers - 1:
            raise InvalidInputError("rank_list needs one rank per interface")
        if not 0 < self.param_low < self.param_high:
            raise InvalidInputError("parameter box must satisfy 0 < low < high")
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be >= 1")
        return self

    def lines(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "rank_list":
                v = ",".join(str(r) for r in v)
            out.append(f"{f.name} = {v}")
        return out


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` configuration lines."""
    values: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line is not 'key = value': {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        values[key] = val
    return values


_CONVERTERS = {
    "n_layers": int, "target_h": float, "threshold": float, "fixed_rank": int,
    "param_low": float, "param_high": float, "n_samples": int, "seed": int,
}


def config_from_sources(path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    merged: dict = {}
    if path:
        merged.update(parse_config(Path(path).read_text()))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    valid = {f.name for f in fields(RunConfig)}
    for key, val in merged.items():
        if key not in valid:
            raise InvalidInputError(f"unknown config key {key!r}")
        if key == "rank_list":
            if isinstance(val, str):
                val = tuple(int(p) for p in val.split(",") if p.strip())
            else:
                val = tuple(int(p) for p in val)
        elif key in _CONVERTERS and isinstance(val, str):
            try:
                val = _CONVERTERS[key](val)
            except ValueError as exc:
                raise InvalidInputError(f"bad value for {key}: {val!r}") from exc
        cfg = replace(cfg, **{key: val})
    return cfg.validate()


def config_hash(cfg: RunConfig) -> str:
    # the output directory does not influence any computed value
    lines = [l for l in cfg.lines() if not l.startswith("output ")]
    blob = "\n".join(sorted(lines)).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def file_header(cfg: RunConfig) -> str:
    return f"layerrom {__version__} config {config_hash(cfg)}"


def make_source(name: str):
    if name in _SOURCES:
        return _SOURCES[name]
    # free-form expression in x1, x2 using numpy
    try:
        code = compile(name, "<source>", "eval")
    except SyntaxError as exc:
        raise InvalidInputError(f"cannot parse source expression {name!r}") from exc

    def f(x1, x2, _code=code):
        return eval(_code, {"__builtins__": {}},
                    {"x1": x1, "x2": x2, "np": np, "pi": np.pi,
                     "sin": np.sin, "cos": np.cos, "exp": np.exp})
    try:
        np.asarray(f(np.zeros(2), np.zeros(2)), dtype=float)
    except Exception as exc:
        raise InvalidInputError(f"source expression {name!r} failed to evaluate") from exc
    return f


def make_profile(geometry: str) -> meshmod.LayerProfile:
    if geometry == "square":
        return meshmod.LayerProfile.square()
    if geometry == "crown":
        return meshmod.LayerProfile.crown()
    path = Path(geometry)
    if not path.exists():
        raise InvalidInputError(f"geometry must be square, crown, or a profile file; "
                                f"no file {geometry!r}")
    return meshmod.load_profile(path.read_text())


def build_mesh(cfg: RunConfig) -> meshmod.Mesh:
    template = meshmod.build_template_layer(make_profile(cfg.geometry), cfg.target_h)
    return meshmod.reflect_and_tile(template, cfg.n_layers)


@dataclass
class Pipeline:
    """Everything the commands need, built once from a configuration."""

    cfg: RunConfig
    mesh: meshmod.Mesh
    part: meshmod.DofPartition
    stiffness: fem.LayerStiffness
    load: fem.LoadVector
    deco: Decomposition
    svds: list


def run_pipeline(cfg: RunConfig) -> Pipeline:
    msh = build_mesh(cfg)
    part = meshmod.classify_dofs(msh)
    K = fem.assemble_layer_stiffness(msh, part)
    b = fem.assemble_load(msh, part, make_source(cfg.source), source=cfg.source)
    deco = Decomposition(msh, part, K)
    svds = slowfast.interface_svds(deco)
    return Pipeline(cfg, msh, part, K, b, deco, svds)


def ranks_from_policy(cfg: RunConfig, svds) -> list[int]:
    if cfg.rank_policy == "threshold":
        return slowfast.choose_ranks(svds, threshold=cfg.threshold)
    if cfg.rank_policy == "fixed":
        return slowfast.choose_ranks(svds, fixed=cfg.fixed_rank)
    return [int(r) for r in cfg.rank_list]


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_lines(path: Path, cfg: RunConfig, lines: list[str]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {file_header(cfg)}\n")
        for line in lines:
            fh.write(line + "\n")


# -- commands -----------------------------------------------------------------

def cmd_mesh(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    msh = build_mesh(cfg)
    part = meshmod.classify_dofs(msh)
    meshmod.write_mesh(msh, out / "mesh.txt", comment=file_header(cfg))
    stats = [
        f"vertices = {msh.n_vertices}",
        f"triangles = {msh.n_triangles}",
        f"free_dofs = {part.n_free}",
        f"interior_dofs = {','.join(str(len(s)) for s in part.interior)}",
        f"interface_dofs = {','.join(str(len(s)) for s in part.interface)}",
    ]
    _write_lines(out / "dof_report.txt", cfg, stats)
    for line in stats:
        print(line)
    print(f"wrote {out / 'mesh.txt'}")
    return 0


def _manifest_lines(cfg: RunConfig, pipe: Pipeline, model: rom.ReducedModel) -> list[str]:
    return cfg.lines() + [
        f"free_dofs = {pipe.part.n_free}",
        f"interface_dofs = {','.join(str(len(s)) for s in pipe.part.interface)}",
        f"ranks = {','.join(str(r) for r in model.ranks)}",
        f"slow_dimension = {model.slow_dim}",
        f"map_dimension = {model.map_dimension}",
        f"edge_interaction = {model.edge_interaction:.17g}",
        f"fast_interaction = {model.fast_interaction:.17g}",
    ]


def cmd_build(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    pipe = run_pipeline(cfg)
    ranks = ranks_from_policy(cfg, pipe.svds)
    basis = slowfast.build_slow_fast_basis(pipe.svds, ranks)
    model = rom.build_rom(pipe.deco, pipe.stiffness, pipe.load, basis)

    meshmod.write_mesh(pipe.mesh, out / "mesh.txt", comment=file_header(cfg))
    rom.save_model(model, out / "model.npz")
    slowfast.write_singular_values(pipe.svds, out / "singular_values.csv",
                                   comment=file_header(cfg))
    _write_lines(out / "config.txt", cfg, cfg.lines())
    manifest = _manifest_lines(cfg, pipe, model)
    _write_lines(out / "manifest.txt", cfg, manifest)
    for line in manifest[len(cfg.lines()):]:
        print(line)
    print(f"wrote {out / 'model.npz'}")
    return 0


def _load_model_dir(model_dir: str):
    mdir = Path(model_dir)
    cfg_path = mdir / "config.txt"
    model_path = mdir / "model.npz"
    if not cfg_path.exists() or not model_path.exists():
        raise InvalidInputError(f"{model_dir!r} does not contain config.txt and model.npz")
    cfg = config_from_sources(cfg_path, {})
    return cfg, rom.load_model(model_path), mdir


def _parse_y(text: str, n: int) -> np.ndarray:
    try:
        y = np.array([float(p) for p in text.split(",")])
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse parameter vector {text!r}") from exc
    return fem.check_parameters(y, n)


def cmd_solve(model_dir: str, y_text: str, check: bool, export: bool, vtk: bool) -> int:
    cfg, model, mdir = _load_model_dir(model_dir)
    y = _parse_y(y_text, model.n_layers)
    solution = rom.evaluate(model, y)
    u = solution.field()

    vertex_u = np.zeros(model.n_vertices)
    vertex_u[model.vertex_of_free] = u
    fem.write_field(mdir / "solution.txt", vertex_u, comment=file_header(cfg))
    print(f"wrote {mdir / 'solution.txt'}")

    if export:
        lines = []
        for i, (c, w) in enumerate(zip(solution.subdomain_coeffs, model.subdomain_fields), 1):
            name = f"component_domain_{i}.txt"
            vals = np.zeros(model.n_vertices)
            vals[model.vertex_of_free] = w
            fem.write_field(mdir / name, vals, comment=file_header(cfg))
            lines.append(f"{name} coefficient = {c:.17g}")
        for i, (c, w) in enumerate(zip(solution.fast_coeffs, model.fast_fields), 1):
            name = f"component_fast_{i}.txt"
            vals = np.zeros(model.n_vertices)
            vals[model.vertex_of_free] = w
            fem.write_field(mdir / name, vals, comment=file_header(cfg))
            lines.append(f"{name} coefficient = {c:.17g}")
        for j in range(model.slow_dim):
            name = f"component_slow_{j + 1}.txt"
            vals = np.zeros(model.n_vertices)
            vals[model.vertex_of_free] = model.slow_matrix[:, j]
            fem.write_field(mdir / name, vals, comment=file_header(cfg))
            lines.append(f"{name} coefficient = {solution.slow_coeffs[j]:.17g}")
        _write_lines(mdir / "solution_manifest.txt", cfg, lines)
        print(f"wrote {model.map_dimension} component fields and solution_manifest.txt")

    if vtk:
        msh = meshmod.read_mesh(mdir / "mesh.txt")
        fem.write_vtk(mdir / "solution.vtk", msh, {"u": vertex_u})
        print(f"wrote {mdir / 'solution.vtk'}")

    if check:
        # only the operators are needed, not the interface machinery
        msh = build_mesh(cfg)
        part = meshmod.classify_dofs(msh)
        K = fem.assemble_layer_stiffness(msh, part)
        b = fem.assemble_load(msh, part, make_source(cfg.source), source=cfg.source)
        truth = fem.solve_full(K, y, b)
        model.stiffness = K
        err = rom.relative_error(model, y, truth)
        print(f"relative energy error vs full solve at y={y_text}: {err:.3e}")
    return 0


def cmd_sweep(cfg: RunConfig, rank_values: list[int]) -> int:
    out = _outdir(cfg)
    pipe = run_pipeline(cfg)
    report = rom.sweep(pipe.deco, pipe.stiffness, pipe.load, pipe.svds,
                       rank_values, bounds=(cfg.param_low, cfg.param_high),
                       n_samples=cfg.n_samples, seed=cfg.seed)
    rom.write_error_report(report, out / "error_report.csv", comment=file_header(cfg))
    for row in report.rows:
        print(f"r={row['r']} sigma_r={row['sigma_r']:.3e} "
              f"max_rel_error={row['max_rel_error']:.3e}")
    print(f"wrote {out / 'error_report.csv'}")
    return 0


def cmd_analytic(cfg: RunConfig, n_modes: int = 8) -> int:
    out = _outdir(cfg)
    alphas = analytic.interface_coefficients(_SOURCES["sin_pi_x2"], n_modes)
    lines = ["n,alpha_n,interaction"]
    for n in range(1, n_modes + 1):
        lines.append(f"{n},{alphas[n - 1]:.17g},{analytic.mode_interaction(n):.17g}")
    _write_lines(out / "mode_table.csv", cfg, lines)

    lines = ["n_slow,fast_bound,edge_bound"]
    for ns in range(0, 7):
        bound = analytic.interaction_bounds(ns)
        lines.append(f"{ns},{bound.fast_bound:.17g},{bound.edge_bound:.17g}")
    _write_lines(out / "bounds_table.csv", cfg, lines)

    # discrete coupling values on square layers against the closed form
    square_cfg = replace(cfg, geometry="square", n_layers=max(3, cfg.n_layers)).validate()
    pipe = run_pipeline(square_cfg)
    sigma = pipe.svds[0].sigma
    lines = ["n,sigma,analytic,rel_diff"]
    for n in range(1, min(7, len(sigma) + 1)):
        ana = analytic.mode_interaction(n)
        rel = abs(sigma[n - 1] - ana) / ana
        lines.append(f"{n},{sigma[n - 1]:.17g},{ana:.17g},{rel:.17g}")
        print(f"mode {n}: discrete {sigma[n - 1]:.6e} analytic {ana:.6e} "
              f"rel diff {rel:.2e}")
    _write_lines(out / "sigma_comparison.csv", square_cfg, lines)
    print(f"wrote mode_table.csv, bounds_table.csv, sigma_comparison.csv in {out}")
    return 0


def cmd_report(model_dir: str) -> int:
    cfg, model, mdir = _load_model_dir(model_dir)
    pair = rom.nwidth_bound(model)
    lines = ["kind,dimension,bound"]
    lines.append(f"svd,{pair.dimension},{pair.bound:.17g}")
    n = model.n_layers
    for ns in range(0, 4):
        bound = analytic.interaction_bounds(ns)
        dim = 2 * n - 1 + (n - 1) * ns
        lines.append(f"analytic_square_{ns},{dim},{bound.fast_bound:.17g}")
    _write_lines(mdir / "nwidth.csv", cfg, lines)
    print(f"map dimension {pair.dimension}, certified coupling bound {pair.bound:.3e}")
    for line in lines[2:]:
        _, dim, bound = line.split(",")
        print(f"square-layer reference: dimension {dim}, bound {float(bound):.3e}")
    print(f"wrote {mdir / 'nwidth.csv'}")
    return 0


# -- argument parsing ----------------------------------------------------------

def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--geometry", help="square, crown, or profile file")
    p.add_argument("--layers", dest="n_layers", type=int)
    p.add_argument("--target-h", dest="target_h", type=float)
    p.add_argument("--source", help="x2, sin_pi_x2, or an expression in x1, x2")
    p.add_argument("--rank-policy", dest="rank_policy",
                   choices=["threshold", "fixed", "list"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--rank", dest="fixed_rank", type=int)
    p.add_argument("--rank-list", dest="rank_list")
    p.add_argument("--box", help="parameter box as low,high")
    p.add_argument("--samples", dest="n_samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output")


def _config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in
                 ("geometry", "n_layers", "target_h", "source", "rank_policy",
                  "threshold", "fixed_rank", "rank_list", "n_samples", "seed",
                  "output")}
    if getattr(args, "box", None):
        lo, hi = (float(p) for p in args.box.split(","))
        overrides["param_low"] = lo
        overrides["param_high"] = hi
    return config_from_sources(getattr(args, "config", None), overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerrom",
        description="reduced solution maps for layered diffusion problems")
    parser.add_argument("--version", action="version", version=f"layerrom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate and export a layered mesh")
    _add_config_options(p)

    p = sub.add_parser("build", help="build and serialize the reduced model")
    _add_config_options(p)

    p = sub.add_parser("solve", help="evaluate a built model at one parameter vector")
    p.add_argument("--model", required=True, help="directory written by build")
    p.add_argument("--y", required=True, help="diffusion coefficients, comma separated")
    p.add_argument("--check", action="store_true", help="compare against a full solve")
    p.add_argument("--export", action="store_true",
                   help="write every stored field with its coefficient")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK output")

    p = sub.add_parser("sweep", help="max error over sampled parameters per rank")
    _add_config_options(p)
    p.add_argument("--ranks", default="5,4,3,2,1",
                   help="comma separated truncation ranks to test")

    p = sub.add_parser("analytic", help="closed-form tables and discrete cross checks")
    _add_config_options(p)
    p.add_argument("--modes", type=int, default=8)

    p = sub.add_parser("report", help="dimension/bound pairs for a built model")
    p.add_argument("--model", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mesh":
            return cmd_mesh(_config_from_args(args))
        if args.command == "build":
            return cmd_build(_config_from_args(args))
        if args.command == "solve":
            return cmd_solve(args.model, args.y, args.check, args.export, args.vtk)
        if args.command == "sweep":
            ranks = [int(p) for p in args.ranks.split(",") if p.strip()]
            if not ranks:
                raise InvalidInputError("empty rank list")
            return cmd_sweep(_config_from_args(args), ranks)
        if args.command == "analytic":
            return cmd_analytic(_config_from_args(args), args.modes)
        if args.command == "report":
            return cmd_report(args.model)
        raise InvalidInputError(f"unknown command {args.command!r}")
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, la.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
