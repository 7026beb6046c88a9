"""Domain types shared by every pipeline stage."""

from mindtrace.model.schema import (
    ADAPTIVE,
    MALADAPTIVE,
    VALENCES,
    Label,
    LabelSchema,
    SchemaException,
    default_schema,
    load_schema,
    schema_from_dict,
)
from mindtrace.model.timeline import (
    ChangeLabel,
    ChangePrediction,
    Post,
    PostAnnotation,
    Timeline,
    TimelineException,
    TimelineValidationException,
    context_window,
    load_timelines,
    parse_timeline,
    parse_timelines,
    serialize_timeline,
    serialize_timelines,
    timeline_from_dict,
    timeline_to_dict,
)
