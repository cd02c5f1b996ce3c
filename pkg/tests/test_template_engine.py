import pytest

from components.analysis import bound_report
from utils.template_engine import TemplateEngine


@pytest.fixture
def engine():
    return TemplateEngine()


def _row(estimator, value, mean, metric="nmse"):
    return {'experiment': 'NmseVsSnr', 'estimator': estimator, 'sweep_param': 'snr_ul_db',
            'sweep_value': value, 'metric': metric, 'mean': mean, 'stderr': 0.001,
            'trials': 10, 'failures': 0, 'seed': 1, 'config_hash': 'h'}


class TestTemplateEngine:
    def test_available_templates(self, engine):
        assert engine.get_available_templates() == ['bounds', 'summary']

    def test_unknown_template(self, engine):
        assert engine.render_template('missing').startswith("<!-- Error rendering template")

    def test_bounds_text(self, engine):
        text = engine.render_bounds(bound_report(256, 8, 1.0, sigma2_ul=0.1).to_dict())
        assert text.startswith("Support detection bounds (N=256, V=8")
        for name in ('power_ratio_lb', 'prob_lb', 'kappa', 'eta', 'amplitude_threshold', 'threshold status'):
            assert name in text

    def test_bounds_missing_value(self, engine):
        text = engine.render_bounds(bound_report(64, 5, 1.0).to_dict())
        assert "n/a" in text
        assert "not evaluated" in text

    def test_summary_groups(self, engine):
        rows = [_row("SD", 0.0, 0.5), _row("OMP", 0.0, 0.9), _row("SD", 10.0, 0.05)]
        text = engine.render_summary(rows, title="Run")
        assert text.startswith("# Run")
        assert "## SD: nmse" in text and "## OMP: nmse" in text
        assert text.index("## SD: nmse") < text.index("## OMP: nmse")
        assert "| 10 | 0.05 | 0.001 | 10 | 0 |" in text
        assert "3 rows" in text
