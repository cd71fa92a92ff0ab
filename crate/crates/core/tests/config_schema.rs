use bnnfilter::expcli::{ExperimentConfig, ExperimentKind, FILTERED_TUNABLES, LATENT_TUNABLES};

fn shipped() -> Vec<(String, ExperimentConfig)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| {
            let cfg = ExperimentConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), cfg)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn every_experiment_has_a_config() {
    let configs = shipped();
    for kind in ExperimentKind::ALL {
        let file = kind.as_str().replace('-', "_");
        let (_, cfg) = configs
            .iter()
            .find(|(name, _)| *name == file)
            .unwrap_or_else(|| panic!("no configs/{file}.toml"));
        assert_eq!(cfg.experiment, kind);
    }
}

#[test]
fn tunable_counts() {
    assert_eq!(LATENT_TUNABLES.len(), 7);
    assert_eq!(FILTERED_TUNABLES.len(), 3);
    assert!(LATENT_TUNABLES.iter().all(|k| k.starts_with("latent.")));
    assert!(FILTERED_TUNABLES.iter().all(|k| k.starts_with("filtered.")));
}

#[test]
fn echo_reparses_to_the_same_config() {
    for (name, cfg) in shipped() {
        let text: String = cfg
            .echo()
            .into_iter()
            .filter(|(k, _)| !k.starts_with("run."))
            .map(|(k, v)| {
                let bare = v.parse::<f64>().is_ok() || v == "true" || v == "false" || v.starts_with('[');
                if bare { format!("{k} = {v}\n") } else { format!("{k} = \"{v}\"\n") }
            })
            .collect();
        let back = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(back.echo(), cfg.echo(), "{name}");
    }
}
