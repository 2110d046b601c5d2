"""Prompt behavior classification against the 17-code, 6-category codebook.

The default backend is a deterministic, priority-ordered rule table so the
whole pipeline runs offline; an LLM-backed client can be plugged in behind
the same interface and its answers are validated against the codebook.
"""
from __future__ import annotations

import json
import os
import re
import urllib.request
from dataclasses import dataclass

from .errors import BackendError

CODEBOOK_VERSION = "v1"

CATEGORY_BY_CODE = {
    "ai_suggest_steps_or_plan": "Plan",
    "ai_breakdown_intent": "Plan",
    "ai_improve_prompt": "Plan",
    "ai_choose_approach": "Plan",
    "ai_generate_code": "Code",
    "ai_edit_partial_code": "Code",
    "ai_write_documentation": "Code",
    "ai_explain_bug_or_error": "Explain",
    "ai_explain_code_or_api": "Explain",
    "ai_explain_concepts": "Explain",
    "ai_understand_codebase": "Explain",
    "ai_critique_output": "Eval",
    "ai_setup_environment": "Setup",
    "ai_git_operations": "Setup",
    "ai_run_or_deploy": "Setup",
    "ai_acknowledge": "Converse",
    "ai_provide_context": "Converse",
}

CATEGORIES = ("Plan", "Code", "Explain", "Eval", "Setup", "Converse")

OTHER_CODE = "other"
OTHER_CATEGORY = "Other"


@dataclass(frozen=True)
class BehaviorLabel:
    code: str
    category: str
    matched_rule_id: str

    def to_dict(self) -> dict:
        return {"code": self.code, "category": self.category, "matched_rule_id": self.matched_rule_id}


# First match wins. Ordering resolves overlaps deliberately: pasted errors
# beat everything, documentation beats generic "write a ...", git/setup/run
# beat code generation, prompt-rework beats snippet-rework.
_RULES: list[tuple[str, str, str]] = [
    ("error-or-traceback", "ai_explain_bug_or_error",
     r"(traceback|exception|\b[a-z]+error\b|stack trace|segfault|fail(s|ed|ing)?\s+with|why .*(crash|fail))"),
    ("docs-and-comments", "ai_write_documentation",
     r"(readme|docstrings?|changelog|documentation|document (this|the)|(write|add|draft) .*(docs|comments?))"),
    ("git-operations", "ai_git_operations",
     r"(\bgit\b|merge conflict|rebase|cherry[- ]pick|\bbranch\b|stash|squash|pull request)"),
    ("environment-setup", "ai_setup_environment",
     r"(\binstall\b|set ?up (a|the|my)|virtualenv|\bvenv\b|configure (the|my|a|docker|node)|dependencies|requirements\.txt|environment)"),
    ("run-or-deploy", "ai_run_or_deploy",
     r"(run (the|all|my)\b|start the (server|app|dev)|\bdeploy\b|\blaunch\b|execute (the|this)|npm (start|test)|\bpytest\b)"),
    ("prompt-rework", "ai_improve_prompt",
     r"((rewrite|reword|rephrase|improve|refine) (my|this|the) (prompt|question)|better prompt)"),
    ("task-breakdown", "ai_breakdown_intent",
     r"(break (down|it down|this down)|break .* into|decompose|subtasks?|split (this|the) .* into)"),
    ("plan-steps", "ai_suggest_steps_or_plan",
     r"(step[- ]by[- ]step|outline the steps|steps (to|for)\b|plan (to|for|out)\b|workflow|roadmap)"),
    ("choose-approach", "ai_choose_approach",
     r"(which (library|framework|approach|database|tool|stack)|should i use|recommend (a|an|the)|pros and cons|choose between)"),
    ("navigate-codebase", "ai_understand_codebase",
     r"(where (is|are|does)|which (file|module|class)|project structure|codebase|locate the|find the (file|function|class|definition))"),
    ("explain-code", "ai_explain_code_or_api",
     r"(what does (this|that|the)|explain (this|the) (code|function|method|class|snippet|decorator|api)|how does (this|the|it)|walk me through)"),
    ("explain-concept", "ai_explain_concepts",
     r"(explain the (difference|concept|idea)|what (is|are) (a|an|the)\b|difference between|how do(es)? .* work\b)"),
    ("critique-output", "ai_critique_output",
     r"(review (this|my)|critique|is this (correct|right|ok)\b|any (bugs|issues|problems)|code review|\bevaluate\b|feedback on)"),
    ("edit-snippet", "ai_edit_partial_code",
     r"(refactor|rename (the|this)|change (this|the) (function|loop|method|line|snippet|variable)|modify (this|the)|update (this|the) (function|method|snippet|code)|rewrite (this|the) (function|method|loop))"),
    ("generate-code", "ai_generate_code",
     r"(write (a|an|the|some)\b|\bimplement\b|generate (a|an|the|some|code)|create (a|an|the)\b|add (a|an)\b|build (a|an|the)\b)"),
    ("share-context", "ai_provide_context",
     r"(here (is|are) (the|my)|for context|pasting|output below|log output|this is what (i|we) (have|see|got))"),
    ("acknowledge", "ai_acknowledge",
     r"(sounds good|got it|makes sense|perfect|that works|will do|understood|exactly what i needed|thanks)"),
]

_COMPILED = [(rule_id, code, re.compile(pattern)) for rule_id, code, pattern in _RULES]


class RuleBackend:
    """Deterministic first-match classifier over the priority rule table."""

    def classify(self, prompt_text: str) -> BehaviorLabel:
        lowered = prompt_text.lower()
        for rule_id, code, pattern in _COMPILED:
            if pattern.search(lowered):
                return BehaviorLabel(code=code, category=CATEGORY_BY_CODE[code], matched_rule_id=rule_id)
        return BehaviorLabel(code=OTHER_CODE, category=OTHER_CATEGORY, matched_rule_id="fallback")


class LlmBackend:
    """Optional remote classifier; transport details live in configuration.

    The endpoint receives {"prompt_text", "codebook_version"} and must answer
    {"code": <codebook code>}. Keys come from the environment, never code.
    """

    def __init__(self, endpoint: str, api_key_env: str = "TRACEWEAVE_LLM_KEY", timeout_s: float = 30.0):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def classify(self, prompt_text: str) -> BehaviorLabel:
        payload = json.dumps({
            "prompt_text": prompt_text,
            "codebook_version": CODEBOOK_VERSION,
        }).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint,
            data=payload,
            headers={"Content-Type": "application/json"},
        )
        key = os.environ.get(self.api_key_env)
        if key:
            request.add_header("Authorization", f"Bearer {key}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                answer = json.loads(response.read().decode("utf-8"))
        except Exception as exc:
            raise BackendError(f"classifier backend unreachable: {exc}") from exc
        code = answer.get("code")
        if code not in CATEGORY_BY_CODE:
            return BehaviorLabel(code=OTHER_CODE, category=OTHER_CATEGORY, matched_rule_id="llm-invalid")
        return BehaviorLabel(code=code, category=CATEGORY_BY_CODE[code], matched_rule_id="llm")


_DEFAULT_BACKEND = RuleBackend()


def classify_behavior(prompt_text: str, backend=None) -> BehaviorLabel:
    """Label one non-trivial prompt; deterministic given backend and input."""
    return (backend or _DEFAULT_BACKEND).classify(prompt_text)
