"""Fetal fat segmentation toolkit for Dixon MRI volumes."""

from ._volseg import (  # noqa: F401
    Mask,
    PhantomCase,
    Volume,
    VolsegError,
    __version__,
    assd_mm,
    dice,
    distance_transform,
    evaluate_case,
    generate_phantom,
    hausdorff_mm,
    paired_t_test,
    read_nifti,
    read_nifti_mask,
    resample_mask_like,
    run_semi_auto,
    t_cdf,
    volume_ml,
    welch_t_test,
    write_nifti,
    write_nifti_mask,
    write_phantom_case,
)
