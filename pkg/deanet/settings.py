"""
Django settings for the deanet project.

The project has no web surface: it hosts the dea_app management commands
(gen, tile, screen, stats, infer, eval) and the test runner.
"""
import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('DEA_SECRET_KEY', 'django-insecure-deanet-cli-only')

DEBUG = False

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'dea_app',
]

# SimpleTestCase only; no models
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Nilai default hyper-parameter. File `key = value` dari --config bisa
# menimpa semuanya; key di luar dict ini ditolak.
DEA_DEFAULTS = {
    # pyramid anchors
    'strides': '4, 8, 16, 32, 64',
    'base_scale': '8',
    'extra_scales': '',
    'ratios': '0.5, 1, 2',
    'clip_border': 'false',
    'preset': 'default',
    # anchor-free per-level ranges, (lo, hi] pairs for each level
    'af_ranges': '0-64, 64-128, 128-256, 256-512, 512-inf',
    # sample discriminator
    't_pos': '0.5',
    't_neg': '0.3',
    'low_quality_rescue': 'false',
    'iou_mode': 'hbb',
    'enhanced_wiring': 'both',
    'anchor_rule': 'keep',
    # losses
    'gamma': '2',
    'alpha': '0.25',
    'smooth_l1_beta': '1',
    'ab_weight': '1',
    'af_weight': '1',
    # tiling
    'patch_size': '1024',
    'tile_stride': '824',
    'crop_retention': '0.5',
    # inference
    'nms_iou': '0.1',
    'score_thresh': '0.05',
    'inference': 'freeze',
    # evaluation
    'eval_iou': '0.5',
    'voc07': 'false',
    # synthetic corpus
    'image_size': '1024',
    'objects_min': '4',
    'objects_max': '24',
    'tiny_fraction': '0.3',
    'extreme_fraction': '0.1',
    'af_noise': '0',
    'proposal_jitter': '0.05',
    'proposals_per_object': '4',
    # synthetic boxes overlapping a same-class box above this IoU are redrawn
    'max_same_class_iou': '0.05',
    # distribution study: grid anchors or the scene proposals
    'study_anchors': 'grid',
    # parsing
    'strict': 'false',
    # worker pool
    'threads': '1',
    'seed': '0',
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'dea_app': {
            'handlers': ['console'],
            'level': os.environ.get('DEA_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
