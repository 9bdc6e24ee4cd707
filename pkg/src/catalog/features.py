"""
Item featurization: pseudo-image vector concatenated with learned attribute embeddings
"""
from typing import Dict, Optional
import numpy as np

from ..errors import InputError
from ..nn import Embedding, ParamStore, Tensor, concat
from .catalog import Catalog
from .types import ATTRIBUTES, DEFAULT_ATTRIBUTE_DIMS, IMAGE_DIM, Item


class AttributeEmbeddings:
    """One embedding table per categorical attribute"""

    def __init__(self, store: ParamStore, name: str, cardinalities: Dict[str, int],
                 rng: np.random.Generator, dims: Optional[Dict[str, int]] = None):
        self.dims = dict(dims or DEFAULT_ATTRIBUTE_DIMS)
        self.cardinalities = dict(cardinalities)
        self.tables: Dict[str, Embedding] = {
            attr: Embedding(store, f"{name}.{attr}", self.cardinalities[attr], self.dims[attr], rng)
            for attr in ATTRIBUTES
        }

    @property
    def output_dim(self) -> int:
        return IMAGE_DIM + sum(self.dims[attr] for attr in ATTRIBUTES)

    def slice_of(self, attribute: str) -> slice:
        """Columns of the featurized vector that hold one attribute's embedding"""
        start = IMAGE_DIM
        for attr in ATTRIBUTES:
            if attr == attribute:
                return slice(start, start + self.dims[attr])
            start += self.dims[attr]
        raise KeyError(attribute)


def featurize_codes(codes: np.ndarray, images: np.ndarray, tables: AttributeEmbeddings) -> Tensor:
    """codes [..., 7] ints and images [..., 128] -> Tensor [..., 128 + sum(dims)]"""
    codes = np.asarray(codes, dtype=np.int64)
    for column, attr in enumerate(ATTRIBUTES):
        values = codes[..., column]
        size = tables.cardinalities[attr]
        if values.size and (values.min() < 0 or values.max() >= size):
            raise InputError(f"Unknown {attr} code; valid codes are [0, {size})")
    parts = [Tensor(np.asarray(images, dtype=tables.tables[ATTRIBUTES[0]].table.dtype))]
    parts.extend(tables.tables[attr](codes[..., column]) for column, attr in enumerate(ATTRIBUTES))
    return concat(parts, axis=-1)


def featurize(item: Item, tables: AttributeEmbeddings) -> Tensor:
    """Single item -> Tensor[d_item]"""
    return featurize_codes(np.array(item.attribute_codes()), item.image_vec, tables)


def featurize_rows(rows: np.ndarray, catalog: Catalog, tables: AttributeEmbeddings) -> Tensor:
    """Catalog rows of any shape -> Tensor[rows.shape + (d_item,)]"""
    rows = np.asarray(rows, dtype=np.int64)
    return featurize_codes(catalog.attribute_codes[rows], catalog.image_matrix[rows], tables)
