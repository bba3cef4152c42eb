"""
Plugin Loader - import user modules that define occlusion estimators.
"""

import importlib
import importlib.util
import inspect
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Type

from pysmurf.plugins.base import BaseOcclusionEstimator, EstimatorRegistry

logger = logging.getLogger("pysmurf.plugins")


class PluginLoader:
    """
    Usage:
        loader = PluginLoader(registry)
        loader.load_module("myproject.estimators")
        loader.load_file("/path/to/estimators.py")
    """

    def __init__(self, registry: Optional[EstimatorRegistry] = None):
        self.registry = registry or EstimatorRegistry()
        self._loaded: Dict[str, object] = {}

    def load_module(self, module_name: str) -> List[Type[BaseOcclusionEstimator]]:
        """
        Import a module and register every estimator class it defines.

        Raises:
            ImportError: if the module cannot be imported
        """
        try:
            module = importlib.import_module(module_name)
        except ImportError as e:
            logger.error("failed to import plugin module '%s': %s", module_name, e)
            raise
        self._loaded[module_name] = module
        return self._discover(module)

    def load_file(self, file_path: str) -> List[Type[BaseOcclusionEstimator]]:
        """Import a Python file by path and register its estimators."""
        path = Path(file_path)
        if not path.is_file():
            raise FileNotFoundError(f"plugin file not found: {file_path}")
        module_name = f"pysmurf_plugin_{path.stem}"
        spec = importlib.util.spec_from_file_location(module_name, path)
        if spec is None or spec.loader is None:
            raise ImportError(f"cannot load plugin file: {file_path}")
        module = importlib.util.module_from_spec(spec)
        sys.modules[module_name] = module
        spec.loader.exec_module(module)
        self._loaded[str(path)] = module
        return self._discover(module)

    def load(self, target: str) -> List[Type[BaseOcclusionEstimator]]:
        """Dispatch on whether ``target`` looks like a file path."""
        if target.endswith(".py") or Path(target).is_file():
            return self.load_file(target)
        return self.load_module(target)

    def _discover(self, module: object) -> List[Type[BaseOcclusionEstimator]]:
        found = []
        for _, obj in inspect.getmembers(module, inspect.isclass):
            if obj is BaseOcclusionEstimator or not issubclass(obj, BaseOcclusionEstimator):
                continue
            if inspect.isabstract(obj):
                continue
            self.registry.register(obj, override=True)
            found.append(obj)
            logger.info("registered occlusion estimator '%s'", obj.get_config().name)
        return found
