use mapf_core::layouts::{
    all_reference_models, build_layout, load_layout, resolve_layout, sample_tasks, save_layout, validate_layout,
    LayoutMeta, VariantParams,
};
use mapf_core::rng_from_seed;

#[test]
fn every_reference_model_is_connected_and_valid() {
    for id in all_reference_models() {
        let built = build_layout(id, &VariantParams::default()).unwrap();
        assert!(built.grid.is_connected(), "{}", id.name());
        assert_eq!(built.default_tasks.is_some(), id.family.has_default_tasks(), "{}", id.name());
        if let Some(tasks) = &built.default_tasks {
            assert!(validate_layout(&built.grid, tasks).is_valid(), "{}", id.name());
        } else {
            let tasks = sample_tasks(&built.grid, 4, &mut rng_from_seed(42)).unwrap();
            assert!(validate_layout(&built.grid, &tasks).is_valid());
        }
    }
}

#[test]
fn saved_layouts_load_back() {
    let dir = tempfile::tempdir().unwrap();
    for id in all_reference_models() {
        let built = build_layout(id, &VariantParams::default()).unwrap();
        let meta = LayoutMeta {
            name: id.name(),
            family: Some(id.family),
            variant: Some(id.variant),
            params: VariantParams::default(),
            default_tasks: built.default_tasks.clone(),
        };
        let (grid_path, _) = save_layout(dir.path(), &built.grid, &meta).unwrap();
        let (loaded, loaded_meta) = load_layout(&grid_path).unwrap();
        assert_eq!(loaded.grid.to_text(), built.grid.to_text());
        assert_eq!(loaded.default_tasks, built.default_tasks);
        assert_eq!(loaded_meta, meta);
        let by_name = resolve_layout(&id.name(), None, &VariantParams::default(), Some(dir.path())).unwrap();
        assert_eq!(by_name.grid.to_text(), built.grid.to_text());
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let built = resolve_layout("rm3.1", None, &VariantParams::default(), None).unwrap();
    for seed in 0..20 {
        let a = sample_tasks(&built.grid, 6, &mut rng_from_seed(seed)).unwrap();
        let b = sample_tasks(&built.grid, 6, &mut rng_from_seed(seed)).unwrap();
        assert_eq!(a, b);
        assert!(validate_layout(&built.grid, &a).is_valid());
    }
}
