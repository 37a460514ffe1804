"""Paper-style figure rendering for orbit-transfer run artifacts."""

from .schema import SCHEMA_COLUMNS, RunArtifacts, SchemaError, load_run
from .figures import FIGURES, radii_consistency, render_figure

__version__ = "0.1.0"
