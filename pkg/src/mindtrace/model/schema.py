"""ABCD label schema.

The schema lists the self-state elements (affect, behavior, cognition,
desire, optionally split by target), the subelements belonging to each
element, and the fixed valence pair. It's loaded from a YAML or JSON file
so the element naming can change without touching code:

```yaml
elements: [A, B-O, B-S, C-O, C-S, D]
element_names: {A: Affect, ...}          # optional
subelements:
  A: [anxiety, sadness, ...]
  ...
definitions:                             # optional
  A/anxiety: Worry, nervousness or fear about what might happen.
```

The enumeration order of `LabelSchema.labels()` (element, then valence, then
subelement) fixes the one-hot index of every label triple.
"""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

import yaml

from mindtrace.logger import logger
from mindtrace.util import read_data_text

ADAPTIVE = "adaptive"
MALADAPTIVE = "maladaptive"
VALENCES: tuple[str, str] = (ADAPTIVE, MALADAPTIVE)
"""The fixed valence pair, in one-hot enumeration order."""

DEFAULT_SCHEMA = "schema.yaml"


class SchemaException(Exception):
    """Raised when a schema file is malformed or a label isn't part of it."""


@dataclass(frozen=True, order=True)
class Label:
    """A single (element, valence, subelement) label triple.

    Attributes:
        element: Element name, e.g. `"A"` or `"C-S"`.
        valence: Either `"adaptive"` or `"maladaptive"`.
        subelement: Subelement name within the element.
    """

    element: str
    valence: str
    subelement: str

    @property
    def adaptive(self) -> bool:
        return self.valence == ADAPTIVE

    def abbreviation(self) -> str:
        """Short form used in prompts and bundle blocks, e.g. `"C-S-:hopelessness"`."""
        sign = "+" if self.adaptive else "-"
        return f"{self.element}{sign}:{self.subelement}"

    def key(self) -> str:
        """Stable string key, `element|valence|subelement`, used in JSON maps."""
        return f"{self.element}|{self.valence}|{self.subelement}"

    @classmethod
    def from_key(cls, key: str) -> "Label":
        parts = key.split("|")
        if len(parts) != 3:
            raise SchemaException(f"Malformed label key '{key}'")
        return cls(*parts)

    def to_dict(self) -> dict[str, str]:
        return {
            "element": self.element,
            "valence": self.valence,
            "subelement": self.subelement,
        }


@dataclass(frozen=True)
class LabelSchema:
    """The active set of elements and subelements.

    Attributes:
        elements: Ordered element names.
        subelements: Mapping of element name to its ordered subelement names.
        definitions: Optional label definitions keyed `"element/subelement"`.
        element_names: Optional human-readable element names.
    """

    elements: tuple[str, ...]
    subelements: Mapping[str, tuple[str, ...]]
    definitions: Mapping[str, str] = field(default_factory=dict)
    element_names: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # read-only copies keep the schema hashable and immutable
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(
            self, "subelements", MappingProxyType({e: tuple(n) for e, n in self.subelements.items()})
        )
        object.__setattr__(self, "definitions", MappingProxyType(dict(self.definitions)))
        object.__setattr__(self, "element_names", MappingProxyType(dict(self.element_names)))

        if not self.elements:
            raise SchemaException("Schema needs at least one element")
        if len(set(self.elements)) != len(self.elements):
            raise SchemaException("Duplicate element names in schema")

        seen: dict[str, str] = {}
        for element in self.elements:
            names = self.subelements.get(element)
            if not names:
                raise SchemaException(f"Element '{element}' has no subelements")
            for name in names:
                if name in seen:
                    raise SchemaException(
                        f"Subelement '{name}' listed under both '{seen[name]}' and '{element}'"
                    )
                seen[name] = element

        extra = set(self.subelements) - set(self.elements)
        if extra:
            raise SchemaException(f"Subelements given for unknown elements: {sorted(extra)}")

    def __hash__(self) -> int:
        return hash(
            (
                self.elements,
                tuple((e, self.subelements[e]) for e in self.elements),
                tuple(sorted(self.definitions.items())),
                tuple(sorted(self.element_names.items())),
            )
        )

    @property
    def valences(self) -> tuple[str, str]:
        return VALENCES

    @cached_property
    def _index(self) -> dict[Label, int]:
        return {label: idx for idx, label in enumerate(self.labels())}

    def labels(self) -> tuple[Label, ...]:
        """All label triples in one-hot enumeration order."""
        return tuple(
            Label(element, valence, subelement)
            for element in self.elements
            for valence in VALENCES
            for subelement in self.subelements[element]
        )

    @property
    def dimension(self) -> int:
        """One-hot dimension, the number of subelements times two valences."""
        return len(self._index)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def index_of(self, label: Label) -> int:
        """Return the one-hot index of `label`.

        Raises:
            SchemaException: If `label` isn't part of this schema.
        """
        try:
            return self._index[label]
        except KeyError:
            raise SchemaException(f"Unknown label {label.abbreviation()}") from None

    def validate(self, label: Label) -> Label:
        """Return `label` unchanged if it's part of the schema, raise otherwise."""
        self.index_of(label)
        return label

    def element_of(self, subelement: str) -> str | None:
        """Return the element `subelement` belongs to, or `None`."""
        for element in self.elements:
            if subelement in self.subelements[element]:
                return element
        return None

    def element_name(self, element: str) -> str:
        return self.element_names.get(element, element)

    def definition(self, label: Label) -> str:
        """Return the definition text of `label`'s subelement, empty if none is set."""
        return self.definitions.get(f"{label.element}/{label.subelement}", "")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "elements": list(self.elements),
            "subelements": {e: list(self.subelements[e]) for e in self.elements},
        }
        if self.element_names:
            data["element_names"] = dict(self.element_names)
        if self.definitions:
            data["definitions"] = dict(self.definitions)
        return data


def schema_from_dict(data: Any) -> LabelSchema:
    """Build a `LabelSchema` from parsed YAML/JSON data.

    Raises:
        SchemaException: If required keys are missing or have the wrong shape.
    """
    if not isinstance(data, dict):
        raise SchemaException("Schema document must be a mapping")

    unknown = set(data) - {"elements", "subelements", "definitions", "element_names"}
    if unknown:
        raise SchemaException(f"Unknown schema keys: {sorted(unknown)}")

    elements = data.get("elements")
    subelements = data.get("subelements")
    if not isinstance(elements, list) or not isinstance(subelements, dict):
        raise SchemaException("Schema needs an 'elements' list and a 'subelements' mapping")

    return LabelSchema(
        elements=tuple(str(e) for e in elements),
        subelements={str(k): tuple(str(s) for s in v or []) for k, v in subelements.items()},
        definitions={str(k): str(v) for k, v in (data.get("definitions") or {}).items()},
        element_names={str(k): str(v) for k, v in (data.get("element_names") or {}).items()},
    )


def load_schema(path: str | Path | None = None) -> LabelSchema:
    """Load a label schema file, or the bundled default schema when `path` is `None`.

    Args:
        path: Optional path to a YAML or JSON schema file.

    Returns:
        The parsed `LabelSchema`.

    Raises:
        SchemaException: If the file can't be parsed or is invalid.
    """
    if path is None:
        text = read_data_text(DEFAULT_SCHEMA)
        source = f"bundled {DEFAULT_SCHEMA}"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaException(f"Failed to parse schema {source}: {e}") from e

    schema = schema_from_dict(data)
    logger.debug(f"Loaded schema from {source}: {len(schema.elements)} elements, dimension {schema.dimension}")
    return schema


_default_schema: LabelSchema | None = None


def default_schema() -> LabelSchema:
    """Return the bundled default schema, loaded once and cached."""
    global _default_schema
    if _default_schema is None:
        _default_schema = load_schema()
    return _default_schema
