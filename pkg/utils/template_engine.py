from jinja2 import Environment, BaseLoader
from typing import Dict, List
from datetime import datetime

class TemplateEngine:
    def __init__(self):
        self.env = Environment(loader=BaseLoader(), trim_blocks=True, lstrip_blocks=True)
        self.env.filters['num'] = _format_number
        self.templates = {}
        self._load_templates()

    def _load_templates(self):
        """Load all template definitions"""
        self.templates = {
            'bounds': self._get_bounds_template(),
            'summary': self._get_summary_template()
        }

    def render_template(self, template_name: str, **kwargs) -> str:
        """Render a template with given context"""
        try:
            if template_name not in self.templates:
                raise KeyError(f"unknown template '{template_name}'")

            template = self.env.from_string(self.templates[template_name])
            return template.render(generated=datetime.now().strftime('%Y-%m-%d %H:%M:%S'), **kwargs)

        except Exception as e:
            return f"<!-- Error rendering template: {str(e)} -->"

    def render_bounds(self, report: Dict) -> str:
        """Plain-text view of a bound report dict"""
        return self.render_template('bounds', report=report)

    def render_summary(self, rows: List[Dict], title: str = "Simulation results") -> str:
        """Markdown tables of result rows, one per estimator and metric"""
        grouped: Dict[tuple, List[Dict]] = {}
        for row in rows:
            grouped.setdefault((row['estimator'], row['metric']), []).append(row)
        groups = [{'estimator': e, 'metric': m, 'rows': r} for (e, m), r in grouped.items()]
        experiments = sorted({row['experiment'] for row in rows})
        return self.render_template('summary', title=title, groups=groups, experiments=experiments,
                                    total=len(rows))

    def get_available_templates(self) -> List[str]:
        """Get list of available templates"""
        return list(self.templates.keys())

    def _get_bounds_template(self) -> str:
        """Get bounds template"""
        return """Support detection bounds (N={{ report.N }}, V={{ report.V }}, alpha={{ report.alpha }}, mu={{ report.mu | num }})
{% for name, value in report['values'].items() %}
  {{ '%-22s' | format(name) }} {{ 'n/a' if value is none else value | num }}
{% endfor %}
  {{ '%-22s' | format('threshold status') }} {{ report.threshold_status }}
"""

    def _get_summary_template(self) -> str:
        """Get summary template"""
        return """# {{ title }}

Experiments: {{ experiments | join(', ') }} ({{ total }} rows, generated {{ generated }})
{% for group in groups %}

## {{ group.estimator }}: {{ group.metric }}

| {{ group['rows'][0].sweep_param }} | mean | stderr | trials | failures |
|---|---|---|---|---|
{% for row in group['rows'] %}
| {{ row.sweep_value | num }} | {{ row.mean | num }} | {{ row.stderr | num }} | {{ row.trials }} | {{ row.failures }} |
{% endfor %}
{% endfor %}
"""


def _format_number(value) -> str:
    try:
        return f"{float(value):.6g}"
    except (TypeError, ValueError):
        return str(value)
