"""Known-good layered encoding sequences for the supported color codes."""

from __future__ import annotations

from src.exceptions import UnsupportedDistanceError
from src.synth.reduction import RowOpSequence

__all__ = ["PUBLISHED_SEQUENCES", "published_sequence"]

PUBLISHED_SEQUENCES: dict[int, str] = {
    1: "",
    3: "0->1, 3->2, 5->4 | 0->3, 2->5, 4->6 | 2->1, 4->3, 6->5",
    5: (
        "1->0, 3->2, 4->5, 7->6, 9->8, 15->12"
        " | 2->0, 6->3, 8->5, 12->10, 13->11"
        " | 2->4, 8->6, 9->7, 10->13, 16->14"
        " | 4->7, 8->10, 14->11, 15->16"
        " | 3->1, 7->10, 14->12, 16->13"
    ),
}


def published_sequence(distance: int) -> RowOpSequence:
    try:
        text = PUBLISHED_SEQUENCES[distance]
    except KeyError:
        raise UnsupportedDistanceError(distance) from None
    return RowOpSequence.parse(text)
