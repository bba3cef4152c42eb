"""
Plugin Base - Abstract base class for occlusion estimators.

Estimators register by name so configs and the CLI can select them with a
string, and users can add their own without touching the solver.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Type, Union

import numpy as np

from pysmurf.errors import RejectedInputError


@dataclass
class EstimatorConfig:
    """Metadata for an occlusion estimator."""
    name: str
    description: str = ""
    needs_backward: bool = True
    enabled: bool = True


class BaseOcclusionEstimator(ABC):
    """
    Abstract base class for occlusion estimators.

    To add an estimator:

    ```python
    from pysmurf.plugins import BaseOcclusionEstimator, EstimatorConfig, occlusion_plugin

    @occlusion_plugin
    class MagnitudeEstimator(BaseOcclusionEstimator):
        @classmethod
        def get_config(cls) -> EstimatorConfig:
            return EstimatorConfig(name="magnitude", needs_backward=False)

        def estimate(self, forward, backward=None):
            return (np.linalg.norm(forward, axis=2) < 20.0).astype(np.float64)
    ```
    """

    def __init__(self, **kwargs: Any):
        self._config = self.get_config()
        self._kwargs = kwargs

    @classmethod
    @abstractmethod
    def get_config(cls) -> EstimatorConfig:
        """Return the configuration for this estimator."""

    @abstractmethod
    def estimate(self, forward: np.ndarray, backward: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Estimate the frame-1 visibility mask.

        Args:
            forward: frame 1 -> frame 2 flow
            backward: frame 2 -> frame 1 flow

        Returns:
            H x W mask in [0, 1], 1 = visible
        """

    @property
    def name(self) -> str:
        return self._config.name

    @property
    def enabled(self) -> bool:
        return self._config.enabled


class EstimatorRegistry:
    """
    Registry for occlusion estimators.

    Usage:
        registry = EstimatorRegistry()
        registry.register(MyEstimator)
        estimator = registry.create("my_estimator", threshold=0.5)
    """

    _global_registry: Dict[str, Type[BaseOcclusionEstimator]] = {}

    def __init__(self) -> None:
        self._local_registry: Dict[str, Type[BaseOcclusionEstimator]] = {}

    def register(
        self,
        estimator_class: Type[BaseOcclusionEstimator],
        override: bool = False,
    ) -> Type[BaseOcclusionEstimator]:
        """
        Register an estimator class.

        Raises:
            ValueError: if the name is taken and override=False
            TypeError: if not a BaseOcclusionEstimator subclass
        """
        if not (isinstance(estimator_class, type) and issubclass(estimator_class, BaseOcclusionEstimator)):
            raise TypeError(f"{estimator_class} must be a subclass of BaseOcclusionEstimator")
        name = estimator_class.get_config().name
        if name in self._local_registry and not override:
            raise ValueError(f"Estimator '{name}' already registered. Use override=True to replace.")
        self._local_registry[name] = estimator_class
        return estimator_class

    def unregister(self, name: str) -> bool:
        if name in self._local_registry:
            del self._local_registry[name]
            return True
        return False

    def get(self, name: str) -> Optional[Type[BaseOcclusionEstimator]]:
        return self._local_registry.get(name) or self._global_registry.get(name)

    def get_all(self) -> Dict[str, Type[BaseOcclusionEstimator]]:
        combined = dict(self._global_registry)
        combined.update(self._local_registry)
        return combined

    def create(self, name: str, **kwargs: Any) -> BaseOcclusionEstimator:
        """Instantiate a registered estimator by name."""
        estimator_class = self.get(name)
        if estimator_class is None:
            known = ", ".join(sorted(self.get_all())) or "none"
            raise RejectedInputError(f"unknown occlusion estimator '{name}' (known: {known})")
        return estimator_class(**kwargs)

    def plugin(
        self,
        cls: Optional[Type[BaseOcclusionEstimator]] = None,
        override: bool = False,
    ) -> Union[Type[BaseOcclusionEstimator], Callable[[Type[BaseOcclusionEstimator]], Type[BaseOcclusionEstimator]]]:
        """Decorator form of ``register``."""
        def decorator(estimator_class: Type[BaseOcclusionEstimator]) -> Type[BaseOcclusionEstimator]:
            return self.register(estimator_class, override=override)

        if cls is not None:
            return decorator(cls)
        return decorator

    def clear(self) -> None:
        self._local_registry.clear()

    @classmethod
    def register_global(cls, estimator_class: Type[BaseOcclusionEstimator]) -> Type[BaseOcclusionEstimator]:
        cls._global_registry[estimator_class.get_config().name] = estimator_class
        return estimator_class


def occlusion_plugin(cls: Type[BaseOcclusionEstimator]) -> Type[BaseOcclusionEstimator]:
    """
    Decorator to globally register an estimator.

    Usage:
        @occlusion_plugin
        class MyEstimator(BaseOcclusionEstimator):
            ...
    """
    return EstimatorRegistry.register_global(cls)
