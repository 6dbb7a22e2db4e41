# cli/dumps.py
import json
from typing import List, Optional

import typer

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import LiouvilleLabError
from liouville_lab.core.logging import log_any, log_error
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Flavor, Scheme
from liouville_lab.cgf.field import sample_field
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.gmc.measure import FlavorData, LqgBuilder, ensemble_masses, ensemble_summary
from liouville_lab.manifolds.factory import ManifoldFactory, build_manifold, validate_spec
from liouville_lab.spectral.basis import SpectralBasis, default_basis
from liouville_lab.spectral.gjms import gjms_spectrum
from liouville_lab.cli.output import write_json, write_rows, write_table

dump_app = typer.Typer(help="Write grids, spectra, fields and measures as CSV.")

MANIFOLD = typer.Option("s2", "--manifold", help="s2, s4, s6, t2, t4 or s2xs2")
CUTOFF = typer.Option(8, "--cutoff")
ELL = typer.Option(None, "--ell", help="field truncation; all modes below the cutoff by default")
SEED = typer.Option(None, "--seed")
OUT = typer.Option(None, "--out", help="CSV path; stdout when omitted")


def dump_basis(manifold: str, cutoff: int, ell: Optional[int] = None) -> SpectralBasis:
    spec = ManifoldFactory.from_alias(manifold)
    validate_spec(spec)
    return default_basis(gjms_spectrum(build_manifold(spec), cutoff), ell)


def point_header(basis: SpectralBasis, *columns: str) -> List[str]:
    return [*(f"x{i}" for i in range(basis.grid.points.shape[1])), *columns]


def spectrum_table(basis: SpectralBasis) -> tuple:
    return ["mode_index", "eigenvalue", "multiplicity", "mode"], basis.spectrum.nu_entries()


def grid_table(basis: SpectralBasis) -> tuple:
    rows = [[*map(float, p), float(w)] for p, w in zip(basis.grid.points, basis.grid.weights)]
    return point_header(basis, "weight"), rows


def field_table(basis: SpectralBasis, seed: int) -> tuple:
    sample = sample_field(basis.spectrum, basis.ell, RngStream(seed), basis)
    return point_header(basis, "h_value"), sample.to_rows()


def coefficient_table(basis: SpectralBasis, seed: int) -> tuple:
    sample = sample_field(basis.spectrum, basis.ell, RngStream(seed), basis)
    return ["mode_index", "xi"], sample.coefficient_rows()


def measure_builder(basis: SpectralBasis, gamma: float, flavor: Flavor, scheme: Scheme) -> LqgBuilder:
    data = None if flavor == Flavor.PLAIN else FlavorData.estimate(basis)
    return LqgBuilder(Mollifier(basis, scheme), gamma, flavor, data)


def measure_table(builder: LqgBuilder, seed: int) -> tuple:
    basis = builder.basis
    measure = builder.build(sample_field(basis.spectrum, basis.ell, RngStream(seed), basis))
    return point_header(basis, "weight"), measure.to_rows(basis.grid.points)


def _emit(table: tuple, out: Optional[str]) -> None:
    header, rows = table
    if out:
        path = write_table(out, header, rows)
        typer.echo(f"wrote {path}")
    else:
        write_rows(typer.get_text_stream("stdout"), header, rows)


def _emit_json(record: dict, out: Optional[str]) -> None:
    if out:
        path = write_json(out, record)
        typer.echo(f"wrote {path}")
    else:
        typer.echo(json.dumps(record, indent=2))


def _guard(name: str, make) -> None:
    try:
        make()
    except LiouvilleLabError as e:
        log_error(e, {"dump": name})
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(1)
    log_any("dump_written", dump=name)


def _seed(seed: Optional[int]) -> int:
    return settings.DEFAULT_SEED if seed is None else seed


@dump_app.command("spectrum")
def dump_spectrum(manifold: str = MANIFOLD, cutoff: int = CUTOFF, out: Optional[str] = OUT):
    """ν blocks of the GJMS operator below the cutoff."""
    _guard("spectrum", lambda: _emit(spectrum_table(dump_basis(manifold, cutoff)), out))


@dump_app.command("grid")
def dump_grid(manifold: str = MANIFOLD, cutoff: int = CUTOFF, out: Optional[str] = OUT):
    """Quadrature nodes and weights resolving every mode below the cutoff."""
    _guard("grid", lambda: _emit(grid_table(dump_basis(manifold, cutoff)), out))


@dump_app.command("field")
def dump_field(
    manifold: str = MANIFOLD,
    cutoff: int = CUTOFF,
    ell: Optional[int] = ELL,
    seed: Optional[int] = SEED,
    out: Optional[str] = OUT,
):
    """One truncated field sample on the grid."""
    _guard("field", lambda: _emit(field_table(dump_basis(manifold, cutoff, ell), _seed(seed)), out))


@dump_app.command("coefficients")
def dump_coefficients(
    manifold: str = MANIFOLD,
    cutoff: int = CUTOFF,
    ell: Optional[int] = ELL,
    seed: Optional[int] = SEED,
    out: Optional[str] = OUT,
):
    """White-noise coefficients ξ_j of the same sample ``field`` writes."""
    _guard(
        "coefficients",
        lambda: _emit(coefficient_table(dump_basis(manifold, cutoff, ell), _seed(seed)), out),
    )


@dump_app.command("measure")
def dump_measure(
    manifold: str = MANIFOLD,
    cutoff: int = CUTOFF,
    ell: Optional[int] = ELL,
    gamma: float = typer.Option(1.0, "--gamma"),
    flavor: Flavor = typer.Option(Flavor.PLAIN, "--flavor"),
    scheme: Scheme = typer.Option(Scheme.EIGENFUNCTION, "--scheme"),
    seed: Optional[int] = SEED,
    out: Optional[str] = OUT,
):
    """LQG weights of one field sample."""

    def make() -> None:
        builder = measure_builder(dump_basis(manifold, cutoff, ell), gamma, flavor, scheme)
        _emit(measure_table(builder, _seed(seed)), out)

    _guard("measure", make)


@dump_app.command("ensemble")
def dump_ensemble(
    manifold: str = MANIFOLD,
    cutoff: int = CUTOFF,
    ell: Optional[int] = ELL,
    gamma: float = typer.Option(1.0, "--gamma"),
    flavor: Flavor = typer.Option(Flavor.PLAIN, "--flavor"),
    scheme: Scheme = typer.Option(Scheme.EIGENFUNCTION, "--scheme"),
    n: int = typer.Option(1000, "--n", help="sample count"),
    powers: List[float] = typer.Option([0.5, 1.0, 2.0, -1.0], "--power", help="repeat for each p"),
    seed: Optional[int] = SEED,
    out: Optional[str] = typer.Option(None, "--out", help="JSON path; stdout when omitted"),
):
    """Mass mean, variance and moments E[μ(M)^p] of an ensemble as JSON."""

    def make() -> None:
        builder = measure_builder(dump_basis(manifold, cutoff, ell), gamma, flavor, scheme)
        masses = ensemble_masses(builder, RngStream(_seed(seed)), n)[:, 0]
        _emit_json(ensemble_summary(builder, masses, powers), out)

    _guard("ensemble", make)
