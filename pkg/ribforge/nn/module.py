"""
Minimal module system: ordered hierarchical parameters and buffers
"""
from typing import Dict, Iterator, List, Tuple

import numpy as np

from ribforge.tensor import Tensor


class Parameter(Tensor):
    """A trainable leaf tensor"""

    def __init__(self, data: np.ndarray):
        super().__init__(data, requires_grad=True, dtype=data.dtype)


class Module:
    """Base class for networks; attributes register in assignment order"""

    def __init__(self):
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)
        object.__setattr__(self, "frozen", False)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, array: np.ndarray) -> None:
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    # -- traversal -------------------------------------------------------
    def named_modules(self, prefix: str = "") -> Iterator[Tuple[str, "Module"]]:
        yield prefix, self
        for name, child in self._modules.items():
            yield from child.named_modules(f"{prefix}{name}.")

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, p in self._parameters.items():
            yield f"{prefix}{name}", p
        for name, child in self._modules.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, b in self._buffers.items():
            yield f"{prefix}{name}", b
        for name, child in self._modules.items():
            yield from child.named_buffers(f"{prefix}{name}.")

    def named_state(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        """Parameters then buffers of each module, depth-first in registration order"""
        for name, p in self._parameters.items():
            yield f"{prefix}{name}", p.data
        for name, b in self._buffers.items():
            yield f"{prefix}{name}", b
        for name, child in self._modules.items():
            yield from child.named_state(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return dict(self.named_state())

    def assign_state(self, arrays: Dict[str, np.ndarray]) -> None:
        """Copy arrays into existing parameters/buffers in place (names/shapes pre-validated)"""
        for name, target in self.named_state():
            np.copyto(target, arrays[name])

    # -- mode ------------------------------------------------------------
    def train(self, mode: bool = True) -> "Module":
        for _, m in self.named_modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def freeze(self) -> "Module":
        """Eval mode and no parameter receives gradient"""
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None
        object.__setattr__(self, "frozen", True)
        return self.eval()

    def set_requires_grad(self, flag: bool) -> None:
        for p in self.parameters():
            p.requires_grad = flag

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module):
    """Ordered container; children are named by index"""

    def __init__(self, modules=()):
        super().__init__()
        self._items: List[Module] = []
        for m in modules:
            self.append(m)

    def append(self, module: Module) -> None:
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Sequential(ModuleList):
    """Apply children in order"""

    def forward(self, x):
        for m in self._items:
            x = m(x)
        return x
