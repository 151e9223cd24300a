"""
Entity markers and the fixed input templates.

Instances render as ``[CLS] <head> , [MASK] , <tail> [SEP] <marked text>``
and descriptions as ``[CLS] [MASK] : <name> , <description>``.
Template punctuation is kept as standalone tokens with fixed vocabulary ids.
"""

from multirep.corpus.models import RelationDescription, RelationInstance, spans_overlap
from multirep.exceptions import ValidationError
from multirep.textproc.vocab import CLS, COLON, COMMA, E1E, E1S, E2E, E2S, MASK, SEP


def apply_entity_markers(inst: RelationInstance) -> list[str]:
    """
    Wrap the head span in [E1S]/[E1E] and the tail span in [E2S]/[E2E].

    Markers follow the spans, not the surface order, so a tail written
    before the head still gets the E2 markers.

    Raises:
        ValidationError: If the spans overlap.
    """
    if spans_overlap(inst.head_span, inst.tail_span):
        raise ValidationError("cannot mark overlapping entity spans")

    opening = {inst.head_span[0]: E1S, inst.tail_span[0]: E2S}
    closing = {inst.head_span[1]: E1E, inst.tail_span[1]: E2E}
    out: list[str] = []
    for i, token in enumerate(inst.tokens):
        if i in opening:
            out.append(opening[i])
        out.append(token)
        if i in closing:
            out.append(closing[i])
    return out


def render_instance_template(inst: RelationInstance) -> list[str]:
    """Instance prompt: entities around [MASK], then the marked sentence."""
    return [
        CLS,
        *inst.head_tokens,
        COMMA,
        MASK,
        COMMA,
        *inst.tail_tokens,
        SEP,
        *apply_entity_markers(inst),
    ]


def render_description_template(desc: RelationDescription) -> list[str]:
    """Description prompt: [MASK] followed by the name and the text."""
    tokens = [CLS, MASK, COLON, *desc.name.split()]
    text = desc.description_text.split()
    if text:
        tokens += [COMMA, *text]
    return tokens
