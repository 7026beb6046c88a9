r"""Mental-health timeline dynamics package root.

This package models how self-states develop across a user's post timeline:

- ABCD self-state tagging with n-gram signatures ranked by log-likelihood ratio
- Adaptive and maladaptive presence rating with random-forest regressors
- Switch and Escalation detection, tree-based or few-shot prompted
- Deterministic template summaries and few-shot LLM summaries
- Dynamic signatures of improvement and deterioration mined across timelines
- The shared-task evaluation metrics for all of the above

Public API
----------
- ``Timeline``, ``Post``, ``PostAnnotation``, ``ChangeLabel``: Domain types.
- ``load_timelines``, ``load_schema``: Input loaders.
- ``TemplateOverrides``: Container to override or disable Jinja templates.
- ``RunConfig`` and ``load_config``: Run configuration.
- The exception types raised for malformed input, see each subpackage.

Example:
    ```python
    from mindtrace import load_timelines
    from mindtrace.summarizer import render_summary, summary_inputs

    for timeline in load_timelines("timelines.json"):
        print(render_summary(summary_inputs(timeline)).text)
    ```

Attributes:
    __version__: Package version string.
"""

from .config import ConfigException as ConfigException
from .config import RunConfig as RunConfig
from .config import load_config as load_config
from .llm.templater import TemplateOverrides as TemplateOverrides
from .model.schema import LabelSchema as LabelSchema
from .model.schema import SchemaException as SchemaException
from .model.schema import load_schema as load_schema
from .model.timeline import ChangeLabel as ChangeLabel
from .model.timeline import Post as Post
from .model.timeline import PostAnnotation as PostAnnotation
from .model.timeline import Timeline as Timeline
from .model.timeline import TimelineException as TimelineException
from .model.timeline import TimelineValidationException as TimelineValidationException
from .model.timeline import load_timelines as load_timelines

__version__ = "0.1.0"
