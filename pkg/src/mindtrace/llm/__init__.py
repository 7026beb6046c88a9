"""Prompting, the inference client and the LLM-backed pipelines."""

from mindtrace.llm.client import (
    BackendConfig,
    BackendTimeoutException,
    EndpointException,
    InferenceClient,
    TransportException,
    complete,
)
from mindtrace.llm.pipelines import (
    LlmSummary,
    PipelineException,
    augment_corpus,
    detect_changes_llm,
    detect_changes_llm_many,
    summarize_llm,
)
from mindtrace.llm.prompts import (
    FewShotBank,
    FewShotExample,
    FewShotSelector,
    PromptException,
    SummaryExample,
    build_augmentation_prompt,
    build_change_prompt,
    build_summary_prompt,
    default_fewshot_bank,
    load_fewshot_bank,
    load_summary_examples,
)
from mindtrace.llm.templater import (
    TemplateException,
    TemplateOverrides,
    Templater,
    clear_templater,
    get_templater,
    reset_templater,
    set_templater,
)
from mindtrace.llm.validation import (
    ChangeResponse,
    ValidatedResponse,
    ValidationExhaustedException,
    extract_first_json,
    parse_validated,
)
