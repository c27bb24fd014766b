from .annotate import (
    AnnotationError,
    PartPointCloud,
    SurfaceSpec,
    annotate_part,
    face_membership,
    refined_center,
)
from .features import FEATURE_DIM, extract_features
from .library import (
    ARCHETYPES,
    AffordanceDataset,
    AffordanceEntry,
    DatasetFormatError,
    generate_part_library,
    read_dataset,
    write_dataset,
)
from .metrics import confusion, f1_score
from .model import (
    AffordanceMap,
    AffordanceModel,
    Hyper,
    TrainingError,
    TrainingReport,
    bce_loss,
    dataset_features,
    loss_and_grads,
    model_from_bytes,
    model_to_bytes,
    positive_weight,
    load_model,
    predict_affordance,
    save_model,
    train_affordance,
)
