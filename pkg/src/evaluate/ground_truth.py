"""
Loading of hand-labelled annotation files.
"""

from __future__ import annotations

import logging
from pathlib import Path

from ..annotate import AnnotationSet, AnnotationTag, Provenance
from ..errors import AnnotationError, GroundTruthError

logger = logging.getLogger(__name__)


def load_ground_truth(path: Path | str) -> AnnotationSet:
    """
    Load a label file (AnnotationSet JSON schema) with provenance Manual.

    Raises:
        GroundTruthError: schema violation, duplicate name, or a function
            labelled as both allocator and deallocator
    """
    try:
        labels = AnnotationSet.load(path, provenance=Provenance.MANUAL)
    except AnnotationError as e:
        raise GroundTruthError(f"Invalid ground truth {path}: {e}") from e

    both = [a.function_name for a in labels if a.tags == {AnnotationTag.ALLOC_SOURCE, AnnotationTag.FREE_SINK}]
    if both:
        raise GroundTruthError(f"Ground truth labels functions with both tags: {', '.join(both)}")

    allocators = sum(1 for a in labels if AnnotationTag.ALLOC_SOURCE in a.tags)
    logger.info(f"[SCORE] Ground truth: {len(labels)} functions ({allocators} AllocSource, {len(labels) - allocators} FreeSink)")
    return labels
