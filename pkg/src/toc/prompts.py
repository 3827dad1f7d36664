"""Prompt templates sent to a remote language-model backend.

Each builder substitutes element, prior art, and chain fields into a fixed
template.  Every template demands strict JSON back; the schemas module
enforces that contract on the response.
"""

from __future__ import annotations

from .claims import ClaimElement, EditOperationType, PriorArtDocument

EXAMINER_SYSTEM_MESSAGE = (
    "You are a professional patent examiner with extensive experience in "
    "patent examination. Your tasks are:\n"
    "1. Carefully analyze the technical features of the claim\n"
    "2. Search for corresponding technical content in the prior art\n"
    "3. Determine whether the claim is disclosed by the prior art\n"
    "4. Provide a detailed reasoning process and evidence\n"
    "5. Assess the confidence of the examination result\n"
    "Please strictly provide your response in the required JSON format."
)

EXAMINER_PROMPT_TEMPLATE = (
    "As a professional patent examiner, please determine whether the "
    "following claim element is disclosed by the given prior art document. "
    "Based on the content of the prior art and your professional judgment, "
    "output a structured conclusion.\n"
    "\n"
    "[Claim Element]\n"
    "ID: {element_id}\n"
    "Type: {element_type}\n"
    "Text: {element_text}\n"
    "\n"
    "[Prior Art Content]\n"
    "{prior_art_description}\n"
    "\n"
    "STRICTLY output the following JSON (no markdown, no backticks):\n"
    "{{\n"
    '  "status": "Disclosed|PartiallyDisclosed|NotDisclosed",\n'
    '  "evidence_text": "verbatim quote(s) from prior art or \'None\'",\n'
    '  "reasoning": "concise reasoning (<120 words) with equivalence mapping",\n'
    '  "confidence": 0.00,\n'
    '  "uncertainty": 0.00,\n'
    '  "human_review": false\n'
    "}}\n"
    "\n"
    "Notes:\n"
    '- "status" is a single label (case-sensitive).\n'
    '- "confidence" in [0.00, 1.00].\n'
    '- "uncertainty" in [0.00, 1.00] and denotes epistemic variance (K stochastic runs).\n'
    '- Set "human_review": true iff uncertainty > 0.20.\n'
    '- Use exact quotes for "evidence_text" when available; otherwise "None".\n'
    "- Output only valid JSON; double quotes; floats with 2 decimals.\n"
    "\n"
    "Ensure the output is complete, accurate, and professional."
)

EDITOR_SYSTEM_MESSAGE = (
    "You are a professional patent attorney with extensive experience in "
    "patent drafting and amendment. Your tasks are:\n"
    "1. Analyze the disclosure status of claim elements\n"
    "2. Select appropriate edit operations\n"
    "3. Modify the claim to avoid being disclosed by the prior art\n"
    "4. Maintain the integrity and feasibility of the technical solution\n"
    "5. Preserve an appropriate scope of protection\n"
    "Please strictly provide your response in the required JSON format."
)

_OPERATION_LIST = "\n".join(f"- {op.value}" for op in EditOperationType)

EDIT_PLANNING_PROMPT_TEMPLATE = (
    "Please modify the following disclosed claim element to avoid being "
    "disclosed by the prior art:\n"
    "\n"
    "Original Claim Element:\n"
    "ID: {element_id}\n"
    "Type: {element_type}\n"
    "Text: {element_text}\n"
    "\n"
    "Disclosure Information:\n"
    "Status: {status}\n"
    "Evidence: {evidence_text}\n"
    "Reasoning: {reasoning}\n"
    "\n"
    "Available Edit Operations:\n"
    f"{_OPERATION_LIST}\n"
    "\n"
    "STRICTLY output the following JSON:\n"
    "{{\n"
    '  "operations": [\n'
    "    {{\n"
    '      "operation_type": "<one of the Allowed Atomic Operations>",\n'
    '      "target_element_id": "{element_id}",\n'
    '      "modified_text": "revised text for this element only",\n'
    '      "rationale": "how it breaks mapped evidence while preserving scope",\n'
    '      "confidence": 0.00\n'
    "    }}\n"
    "  ]\n"
    "}}\n"
    "\n"
    "Rules:\n"
    "- Use only the enumerated operation_type values (exact spellings).\n"
    '- "modified_text" must be legally styled, non-trivial, and feasible.\n'
    "- Prefer minimal change that defeats the cited evidence.\n"
    "- confidence in [0.00, 1.00], 2 decimals. No extra keys."
)

APPLY_OPERATION_PROMPT_TEMPLATE = (
    "Please apply the specified edit operation to modify the claim element:\n"
    "\n"
    "Original Element:\n"
    "ID: {element_id}\n"
    "Text: {element_text}\n"
    "\n"
    "Disclosure Information:\n"
    "{reasoning}\n"
    "\n"
    "Edit Operation Type: {operation_type}\n"
    "\n"
    "Please provide the modified text and reasoning in the following format:\n"
    "{{\n"
    '  "modified_text": "Modified text",\n'
    '  "reasoning": "Reason for modification",\n'
    '  "confidence": 0.85\n'
    "}}"
)


def examiner_prompt(element: ClaimElement, prior_art: PriorArtDocument) -> str:
    return EXAMINER_PROMPT_TEMPLATE.format(
        element_id=element.element_id,
        element_type=element.element_type,
        element_text=element.text,
        prior_art_description=prior_art.description,
    )


def edit_planning_prompt(element: ClaimElement, status: str, evidence_text: str, reasoning: str) -> str:
    return EDIT_PLANNING_PROMPT_TEMPLATE.format(
        element_id=element.element_id,
        element_type=element.element_type,
        element_text=element.text,
        status=status,
        evidence_text=evidence_text,
        reasoning=reasoning,
    )


def apply_operation_prompt(element: ClaimElement, reasoning: str, operation_type: str) -> str:
    return APPLY_OPERATION_PROMPT_TEMPLATE.format(
        element_id=element.element_id,
        element_text=element.text,
        reasoning=reasoning,
        operation_type=operation_type,
    )
