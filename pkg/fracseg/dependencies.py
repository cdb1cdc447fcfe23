# fracseg/dependencies.py
import logging

from fracseg.config import Settings, settings as default_settings
from fracseg.gridio.store import GridStore
from fracseg.services.evaluation_service import EvaluationService
from fracseg.services.segmentation_service import SegmentationService

logger = logging.getLogger(__name__)


def get_settings() -> Settings:
    return default_settings


def get_grid_store() -> GridStore:
    return GridStore()


def get_segmentation_service(settings: Settings | None = None) -> SegmentationService:
    """Dependency injector for SegmentationService, injecting the GridStore."""
    logger.debug("Creating SegmentationService instance.")
    return SegmentationService(settings=settings or get_settings(), store=get_grid_store())


def get_evaluation_service(settings: Settings | None = None) -> EvaluationService:
    """Dependency injector for EvaluationService, sharing one GridStore with its SegmentationService."""
    logger.debug("Creating EvaluationService instance.")
    settings = settings or get_settings()
    store = get_grid_store()
    segmentation = SegmentationService(settings=settings, store=store)
    return EvaluationService(settings=settings, segmentation_service=segmentation, store=store)
