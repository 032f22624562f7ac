import pytest

from vnsim import build_basis, build_structure_tensor


@pytest.fixture(scope="session")
def basis1():
    return build_basis(1)


@pytest.fixture(scope="session")
def basis2():
    return build_basis(2)


@pytest.fixture(scope="session")
def tensor1(basis1):
    return build_structure_tensor(basis1)


@pytest.fixture(scope="session")
def tensor2(basis2):
    return build_structure_tensor(basis2)
