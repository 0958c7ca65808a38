"""nfforge: deterministic near-field XL-MIMO multimodal dataset generator.

Library layout mirrors the pipeline: ``scene`` -> ``trajectory`` ->
``raytrace`` -> ``channel``/``codebook``/``labels``/``sensors`` ->
``dataio``, with ``baselines`` for evaluation and ``cli`` as the entry
point.
"""

__version__ = "0.1.0"
