"""Jinja templating for prompts and summary sentences.

Every prompt sent to the inference endpoint and every sentence of the
deterministic summary is a plain-text Jinja template. Templates are loaded
from the package's `templates` directory by default, or from a user-provided
directory, and single templates can be replaced with override strings.

The main components are:

- `TemplateOverrides`: A dataclass holding optional template string overrides.
- `Templater`: The template loader and renderer, checking overrides first and
  falling back to file-based templates.
- Context-local templater management via `get_templater()`, `set_templater()`,
  `reset_templater()`, and `clear_templater()`.

Typical usage:

```python
from mindtrace.llm.templater import Templater, TemplateOverrides, set_templater

overrides = TemplateOverrides(
    transition="{% if delta == 'switch' %}A switch occurs.{% else %}Things escalate.{% endif %}"
)
set_templater(Templater(overrides=overrides))
```
"""

from contextvars import ContextVar
from dataclasses import dataclass

from jinja2 import (
    Environment,
    FileSystemLoader,
    PackageLoader,
    StrictUndefined,
    Template,
    TemplateNotFound,
)

from mindtrace.logger import logger

PROMPTS = "prompts"
SUMMARY = "summary"
TEMPLATE_TYPES = (PROMPTS, SUMMARY)


class TemplateException(Exception):
    """Raised when a required template can't be found."""


@dataclass
class TemplateOverrides:
    """Container for optional user-provided template overrides.

    Set any field to a non-empty string to override the corresponding default
    template. Set to an empty string to render that template as an empty
    string, or to `None` to use the packaged default template.

    Attributes:
        system_prompt: System message sent with every request.
        change_prompt: Switch/Escalation detection prompt.
        augmentation_prompt: Evidence augmentation prompt.
        summary_prompt: Few-shot summarization prompt.
        batch_patterns_prompt: Per-batch pattern extraction prompt.
        signature_prompt: Cross-batch signature synthesis prompt.
        compress_prompt: Signature compression retry prompt.
        central_theme: Opening summary sentence.
        initial_state: Initial-phase summary sentence.
        interaction_dynamics: Temporal-dynamics summary sentence.
        transition: Structural-transition summary sentence.
        outcome: Later-phase direction summary sentence.
        global_closers: Closing summary sentences.
    """

    # Prompts
    system_prompt: str | None = None
    change_prompt: str | None = None
    augmentation_prompt: str | None = None
    summary_prompt: str | None = None
    batch_patterns_prompt: str | None = None
    signature_prompt: str | None = None
    compress_prompt: str | None = None
    # Summary sentences
    central_theme: str | None = None
    initial_state: str | None = None
    interaction_dynamics: str | None = None
    transition: str | None = None
    outcome: str | None = None
    global_closers: str | None = None


class Templater:
    """Resolves and renders Jinja text templates.

    Lookup is two-tier: a non-`None` value in `TemplateOverrides` wins,
    otherwise the template file is loaded from the configured directory.
    Compiled templates are cached.

    Attributes:
        template_loader: `FileSystemLoader` for a user-provided directory,
            `PackageLoader` for the package defaults.
        template_env: Jinja `Environment`, without autoescaping and with
            strict undefined variables.
        overrides: The active `TemplateOverrides`.
        templates_cache: Compiled templates keyed by `"{template_type}:{name}"`.
    """

    template_loader: FileSystemLoader | PackageLoader
    template_env: Environment
    overrides: TemplateOverrides
    templates_cache: dict[str, Template | None]

    def __init__(
        self,
        path: str | None = None,
        overrides: TemplateOverrides | None = None,
    ) -> None:
        """Initialize the templating environment.

        Args:
            path: Optional directory with custom templates, laid out like the
                package's `templates` directory. If `None`, the packaged
                templates are used.
            overrides: Optional `TemplateOverrides` instance.
        """
        if path:
            logger.debug(f"Using user-provided templates from {path}")
            self.template_loader = FileSystemLoader(path)
        else:
            logger.debug("Using package-provided templates")
            self.template_loader = PackageLoader("mindtrace", "templates")

        self.overrides = TemplateOverrides()

        if overrides and isinstance(overrides, TemplateOverrides):
            logger.debug(f"Setting template overrides: {overrides}")
            self.load_user_overrides(overrides)
        elif overrides:
            logger.error("Provided template config is not a TemplateOverrides instance")

        self.template_env = Environment(
            loader=self.template_loader,
            autoescape=False,
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
        )
        self.templates_cache = {}

    def load_user_overrides(self, overrides: TemplateOverrides | None) -> None:
        """Load user-defined template overrides.

        Args:
            overrides: A `TemplateOverrides` instance whose non-`None` values
                override the packaged defaults. `None` values reset a
                previously set override.
        """
        if not overrides:
            logger.warning("Trying to load template overrides, but no overrides are set")
            return

        for name, value in vars(overrides).items():
            if value is not None:
                logger.debug(f"Setting template override for '{name}'")
            setattr(self.overrides, name, value)

        self.templates_cache = {}

    def get_template(self, name: str, template_type: str) -> Template | None:
        """Get a compiled template, from the cache if it was looked up before.

        Args:
            name: Template name, e.g. `"change"` or `"initial_state"`.
            template_type: `"prompts"` or `"summary"`.

        Returns:
            The compiled `Template`, or `None` if it's disabled or doesn't exist.
        """
        cache_key = f"{template_type}:{name}"
        if cache_key not in self.templates_cache:
            self.templates_cache[cache_key] = self._get_template(name, template_type)
        return self.templates_cache[cache_key]

    def _get_template(self, name: str, template_type: str) -> Template | None:
        logger.debug(f"[ctx {hex(id(self))}] Getting {template_type} template for '{name}'")
        key = name.lower().replace(" ", "_")

        override = self._lookup_template_override(key, template_type)
        if isinstance(override, str):
            if override == "":
                logger.debug("  -> found empty template override")
                return None
            logger.debug("  -> found template override")
            return self.template_env.from_string(override)

        return self._lookup_file_template(key, template_type)

    def _lookup_template_override(self, key: str, template_type: str) -> str | None:
        if template_type == PROMPTS:
            key += "_prompt"
        return getattr(self.overrides, key, None)

    def _lookup_file_template(self, key: str, template_type: str) -> Template | None:
        if template_type not in TEMPLATE_TYPES:
            return None

        try:
            return self.template_env.get_template(f"{template_type}/{key}.j2")
        except TemplateNotFound:
            logger.warning(f"Failed to look up {template_type} template for {key}")
            return None

    def render(self, name: str, template_type: str, **context) -> str:
        """Render a template to a stripped string.

        Templates disabled by an empty override render as an empty string.

        Raises:
            TemplateException: If no template exists for `name`.
        """
        template = self.get_template(name, template_type)
        if template is None:
            key = name.lower().replace(" ", "_")
            if self._lookup_template_override(key, template_type) == "":
                return ""
            raise TemplateException(f"No {template_type} template '{name}'")
        return template.render(**context).strip()


_templater_var: ContextVar[Templater | None] = ContextVar("templater", default=None)
"""Context variable for managing per-context `Templater` instances."""


def get_templater() -> Templater:
    """Get the current context's `Templater` instance.

    Creates and stores a default instance if none is set yet.
    """
    templater_instance = _templater_var.get()

    if templater_instance is None:
        logger.debug("TEMPLATER: No instance set, creating default")
        templater_instance = Templater()
        _templater_var.set(templater_instance)

    return templater_instance


def set_templater(templater_instance: Templater) -> None:
    """Set a `Templater` instance for the current context."""
    logger.debug(f"TEMPLATER: set instance {hex(id(templater_instance))}")
    _templater_var.set(templater_instance)


def reset_templater() -> None:
    """Replace the current context's templater with a fresh default instance."""
    _templater_var.set(Templater())
    logger.debug(f"TEMPLATER: rst instance {_templater_var.get()}")


def clear_templater() -> None:
    """Unset the current context's templater, the next `get_templater()` creates a default one."""
    _templater_var.set(None)
    logger.debug("TEMPLATER: clr instance")
