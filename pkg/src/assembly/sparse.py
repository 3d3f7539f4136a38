from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse import csr_matrix
from scipy.sparse import diags


@dataclass(frozen=True)
class BlockLayout:
    """
    Ordered partition of a global index space into named field blocks.

    Attributes:
        names (tuple[str, ...]): Block names in order, e.g. ("u_x", "u_y", "p", "phi").
        sizes (tuple[int, ...]): Block sizes.
    """

    names: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.sizes):
            raise ValueError("one size per block name is required")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate block names in {self.names}")

    @property
    def size(self) -> int:
        return int(sum(self.sizes))

    def offset(self, name: str) -> int:
        index = self.names.index(name)
        return int(sum(self.sizes[:index]))

    def slice(self, name: str) -> slice:
        start = self.offset(name)
        return slice(start, start + self.sizes[self.names.index(name)])

    def split(self, vector: np.ndarray) -> dict[str, np.ndarray]:
        """
        Splits a global vector into views per block.

        Args:
            vector (numpy.ndarray): Vector of length size.

        Returns:
            dict[str, numpy.ndarray]: Block name to view.
        """
        if vector.shape[0] != self.size:
            raise ValueError(f"vector of length {vector.shape[0]} does not match layout size {self.size}")
        return {name: vector[self.slice(name)] for name in self.names}

    def join(self, blocks: dict[str, np.ndarray]) -> np.ndarray:
        """
        Concatenates per-block vectors in layout order.

        Args:
            blocks (dict[str, numpy.ndarray]): Block name to vector.

        Returns:
            numpy.ndarray: The global vector.
        """
        return np.concatenate([np.asarray(blocks[name], dtype=float) for name in self.names])


@dataclass
class BlockVector:
    """
    A global vector together with its block layout.

    Attributes:
        values (numpy.ndarray): The global vector.
        layout (BlockLayout): The block partition.
    """

    values: np.ndarray
    layout: BlockLayout

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[self.layout.slice(name)]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass
class SparseMatrix:
    """
    A compressed-row matrix with a block map from field names to index ranges.

    Attributes:
        csr (scipy.sparse.csr_matrix): The matrix, column indices sorted per row.
        layout (BlockLayout): Row and column block partition.
    """

    csr: csr_matrix
    layout: BlockLayout

    @property
    def shape(self) -> tuple[int, int]:
        return self.csr.shape

    def block(self, row: str, col: str) -> csr_matrix:
        return self.csr[self.layout.slice(row), :][:, self.layout.slice(col)]

    @classmethod
    def from_triplets(cls, rows, cols, vals, layout: BlockLayout) -> "SparseMatrix":
        """
        Sums duplicate (row, col) entries in input order and compresses.

        Args:
            rows (numpy.ndarray): Row indices.
            cols (numpy.ndarray): Column indices.
            vals (numpy.ndarray): Values.
            layout (BlockLayout): Block partition of rows and columns.

        Returns:
            SparseMatrix: The assembled matrix.
        """
        n = layout.size
        csr = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr=csr, layout=layout)

    def replace_rows_with_identity(self, rows: np.ndarray) -> None:
        """
        Zeros the given rows and puts a unit entry on their diagonal.

        Args:
            rows (numpy.ndarray): Global row indices.
        """
        keep = np.ones(self.shape[0])
        keep[rows] = 0.0
        csr = diags(keep) @ self.csr + diags(1.0 - keep)
        csr = csr_matrix(csr)
        csr.eliminate_zeros()
        csr.sort_indices()
        self.csr = csr


def spmv(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """
    Computes y = A x.

    Args:
        A (SparseMatrix): The matrix.
        x (numpy.ndarray): A vector with as many entries as A has columns.

    Returns:
        numpy.ndarray: The product.

    Raises:
        ValueError: On a dimension mismatch.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(f"cannot multiply a {A.shape} matrix with a vector of shape {x.shape}")
    return A.csr @ x
