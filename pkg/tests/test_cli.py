"""Tests for the command line interface."""

import importlib
import json
import warnings

import numpy as np
import pytest
from pydantic import ValidationError
from pydantic.warnings import PydanticDeprecationWarning

from subfinsler import schemas
from subfinsler.cli.main import run
from subfinsler.models import HeisenbergCurve, Rectangle
from subfinsler.services.export_service import ExportService
from subfinsler.services.graph_service import GraphService

ELLIPSE = '{"kind": "ellipse", "a": 2, "b": 1}'
CYLINDER = "1 - sqrt(1 - x^2)"


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestBodyCommands:
    """Test body validation and error reporting."""

    def test_validate_ellipse(self, capsys):
        """Test a valid body prints its summary."""
        assert run(["body", "validate", "--body", ELLIPSE]) == 0
        report = _stdout_json(capsys)
        assert report["rho_min"] > 0.0
        assert report["area"] == pytest.approx(2.0 * np.pi, abs=1e-10)

    def test_invalid_body(self, capsys):
        """Test a body that is not strictly convex exits with one and a JSON error."""
        body = '{"kind": "fourier", "a0": 1, "cos": [0, 0.5]}'
        assert run(["body", "validate", "--body", body, "--json"]) == 1
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "NotConvexPlus"
        assert "detail" in error

    def test_malformed_json(self, capsys):
        """Test unparsable body descriptions are validation failures."""
        assert run(["body", "validate", "--body", "{kind: disk"]) == 1
        assert "error" in capsys.readouterr().err

    def test_show_writes_table(self, tmp_path):
        """Test the body table has one row per sample."""
        out = tmp_path / "body.csv"
        assert run(["body", "show", "--samples", "64", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "theta,h,rho,kappa,x,F,F_prime"
        assert len(lines) == 65

    def test_unwritable_output(self, tmp_path, capsys):
        """Test outputs must go to an existing directory."""
        out = tmp_path / "missing" / "body.json"
        assert run(["body", "validate", "--out", str(out), "--json"]) == 1
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "ValidationError"

    def test_exclusive_field_sources(self, tmp_path, capsys):
        """Test --expr and --field cannot be combined."""
        assert run(["graph", "area", "--expr", "0", "--field", str(tmp_path / "u.csv")]) == 1

    @pytest.mark.parametrize("argv", [["body"], ["nonsense"], ["body", "validate", "--cells", "many"]])
    def test_usage_errors(self, argv, capsys):
        """Test malformed command lines exit with two."""
        assert run(argv) == 2


class TestWulffCommand:
    """Test shape generation from the command line."""

    def test_generate(self, tmp_path, capsys):
        """Test the disk shape is written as OBJ with a channel table."""
        out = tmp_path / "shape.obj"
        assert run(["wulff", "generate", "--curves", "8", "--samples", "1024", "--out", str(out)]) == 0
        report = _stdout_json(capsys)
        assert report["apex"] == pytest.approx([0.0, 0.0, 2.0 * np.pi], abs=1e-6)
        assert report["max_h_k_gap"] <= 1e-4

        lines = out.read_text().splitlines()
        assert sum(line.startswith("v ") for line in lines) == report["vertices"]
        assert sum(line.startswith("f ") for line in lines) == report["faces"]
        channels = (tmp_path / "shape.channels.csv").read_text().splitlines()
        assert channels[0] == "index,h_k,horizontality_residual"
        assert len(channels) == report["vertices"] + 1


class TestCheckCommand:
    """Test the identity suite."""

    def test_identities_ellipse(self, capsys):
        """Test every identity holds on the ellipse."""
        assert run(["check", "identities", "--body", ELLIPSE]) == 0
        report = _stdout_json(capsys)
        assert report["passed"]
        assert report["body"] == "ellipse(2,1)"


class TestGraphCommands:
    """Test area and criticality from the command line."""

    def test_flat_area(self, capsys):
        """Test the plane over [-1, 1]^2 has area four."""
        assert run(["graph", "area", "--expr", "0"]) == 0
        assert _stdout_json(capsys)["area"] == pytest.approx(4.0, abs=1e-12)

    def test_critical_cylinder(self, capsys):
        """Test the cylinder passes the criticality check with f = 1."""
        argv = ["graph", "critical", "--expr", CYLINDER, "--domain=-0.5,0.5,-0.5,0.5", "--f-expr", "1"]
        assert run(argv) == 0
        report = _stdout_json(capsys)
        assert report["passed"]
        assert report["tests"] > 8

    def test_not_critical(self, capsys):
        """Test the cylinder fails for the wrong curvature."""
        argv = ["graph", "critical", "--expr", CYLINDER, "--domain=-0.5,0.5,-0.5,0.5", "--f-expr", "2"]
        assert run(argv) == 1

    def test_variation(self, capsys):
        """Test the first variation report of the cylinder."""
        argv = ["graph", "variation", "--expr", CYLINDER, "--domain=-0.5,0.5,-0.5,0.5", "--step", "1e-4"]
        assert run(argv) == 0
        report = _stdout_json(capsys)
        assert report["h0_estimate"] == pytest.approx(1.0, abs=1e-6)
        assert report["finite_difference"] == pytest.approx(report["first_variation"], rel=1e-3)

    def test_variation_step_is_relative(self, capsys):
        """Test --step bounds s * sup|v| for the finite difference of the area."""
        bump = GraphService.default_battery(Rectangle(-0.5, 0.5, -0.5, 0.5), 16)[0]
        for step in (1e-3, 1e-4):
            argv = ["graph", "variation", "--expr", CYLINDER, "--domain=-0.5,0.5,-0.5,0.5", "--step", str(step)]
            assert run(argv) == 0
            report = _stdout_json(capsys)
            assert report["step"] == step
            assert report["effective_step"] == pytest.approx(step / bump.sup_norm, rel=1e-12)
            assert report["finite_difference"] == pytest.approx(report["first_variation"], rel=1e-3)

    def test_missing_field(self, capsys):
        """Test graph commands need a field."""
        assert run(["graph", "area"]) == 1

    def test_expression_error(self, capsys):
        """Test syntax errors carry their offset."""
        assert run(["graph", "area", "--expr", "x^", "--json"]) == 1
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "ExpressionSyntaxError"
        assert error["offset"] == 2


class TestFlowCommands:
    """Test leaf tracing and diagnostics."""

    def test_trace(self, tmp_path, capsys):
        """Test a traced leaf is written with its curvature columns."""
        out = tmp_path / "leaf.csv"
        argv = ["flow", "trace", "--expr", "t", "--domain=0,1,0,1", "--start", "0,0.1", "--span", "0,0.5",
                "--out", str(out)]
        assert run(argv) == 0
        report = _stdout_json(capsys)
        assert not report["exited"]
        lines = out.read_text().splitlines()
        assert lines[0] == "xi,t,g,M,f_est"
        assert len(lines) == report["samples"] + 1

    def test_diagnose_corner(self, tmp_path, capsys):
        """Test a curve with a corner is flagged."""
        s = np.linspace(-0.4, 0.4, 801)
        points = np.column_stack([s, np.zeros_like(s), np.abs(s)])
        path = tmp_path / "corner.csv"
        ExportService.write_curve_csv(HeisenbergCurve(params=s, points=points, horizontality_residual=0.0), str(path))
        assert run(["flow", "diagnose", "--curve", str(path)]) == 0
        assert _stdout_json(capsys)["verdict"] == "C2_VIOLATION"

    def test_trace_is_deterministic(self, tmp_path, capsys):
        """Test identical runs write identical bytes."""
        paths = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for path in paths:
            argv = ["flow", "trace", "--expr", "sin(x*t) + t", "--domain=0,1,0,1", "--start", "0,0.1",
                    "--span", "0,0.5", "--out", str(path)]
            assert run(argv) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_family(self, capsys):
        """Test the family jacobian of a constant field is one."""
        argv = ["flow", "family", "--expr", "0.2", "--start=-0.5,0", "--span=-0.5,0.5", "--leaves", "5",
                "--step", "0.01"]
        assert run(argv) == 0
        report = _stdout_json(capsys)
        assert report["min_jacobian"] == pytest.approx(1.0, abs=1e-10)
        assert report["max_jacobian"] == pytest.approx(1.0, abs=1e-10)


class TestSynthesizeCommand:
    """Test patch synthesis from the command line."""

    def test_unit_patch(self, tmp_path, capsys):
        """Test the synthesized disk patch with f = 1 is critical."""
        out = tmp_path / "patch.csv"
        argv = ["synthesize", "patch", "--domain=-0.5,0.5,-0.5,0.5", "--shape", "201,101",
                "--transversal=-0.6,0.6", "--leaves", "121", "--f-expr", "1", "--out", str(out)]
        assert run(argv) == 0
        report = _stdout_json(capsys)
        assert report["passed"]
        assert report["h0_estimate"] == pytest.approx(1.0, abs=1e-3)
        lines = out.read_text().splitlines()
        assert lines[0] == "x,t,u"
        assert len(lines) == 201 * 101 + 1

        assert run(["graph", "critical", "--field", str(out), "--f-expr", "1"]) == 0
        report = _stdout_json(capsys)
        assert report["tolerance"] == pytest.approx(1e-3)
        assert report["field"] == str(out)

    def test_defaults(self, capsys):
        """Test the patch command succeeds with every option left at its default."""
        assert run(["synthesize", "patch", "--json"]) == 0
        report = _stdout_json(capsys)
        assert report["passed"]
        assert report["shape"] == [201, 101]
        assert report["h0_estimate"] == pytest.approx(1.0, abs=1e-3)

    def test_coverage_gap(self, capsys):
        """Test leaves that miss the lattice are reported."""
        argv = ["synthesize", "patch", "--domain=-0.5,0.5,-0.5,0.5", "--shape", "11,11",
                "--transversal=-0.2,0.2", "--leaves", "11", "--json"]
        assert run(argv) == 1
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "CoverageGap"


class TestRunConfig:
    """Test run configuration schemas."""

    def test_no_deprecated_pydantic_api(self):
        """Test the schema module defines its models without deprecation warnings."""
        with warnings.catch_warnings():
            warnings.simplefilter("error", PydanticDeprecationWarning)
            importlib.reload(schemas)

    def test_exclusive_sources(self, tmp_path):
        """Test an expression and a CSV field are rejected together."""
        with pytest.raises(ValidationError):
            schemas.RunConfig(body={"kind": "disk"}, field_expr="x", field_csv=str(tmp_path / "u.csv"))
        config = schemas.RunConfig(body={"kind": "disk"}, field_csv=str(tmp_path / "u.csv"))
        assert config.field_expr is None

    def test_report_from_attributes(self):
        """Test body reports read attributes of plain objects."""
        class Summary:
            label, a0, harmonics, rho_min, h_min = "disk", 1.0, 0, 1.0, 1.0
            area, perimeter, F_range = np.pi, 2.0 * np.pi, [-1.0, 1.0]

        report = schemas.BodyReport.model_validate(Summary())
        assert report.label == "disk"
        assert report.perimeter == pytest.approx(2.0 * np.pi)
