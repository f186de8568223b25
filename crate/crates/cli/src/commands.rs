use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mnn::data::{self, LabeledDataset, Scaler};
use mnn::gradcheck;
use mnn::model_file::{self, SavedModel, SplitInfo};
use mnn::{build_model, decision_region_grid, evaluate, train, InitSpec, Mask, NetworkShape, Result, TrainConfig};

use crate::{Command, EXIT_FAILURE, EXIT_OK, DatasetKind, EvalArgs, GenArgs, GradcheckArgs, PlotArgs, SplitChoice, TrainArgs};

/// Returns the exit code of a command that ran to completion.
pub(crate) fn run(command: Command) -> Result<i32> {
    match command {
        Command::Gen(args) => gen(&args),
        Command::Train(args) => train_cmd(&args),
        Command::Eval(args) => eval(&args),
        Command::Gradcheck(args) => return gradcheck_cmd(&args),
        Command::Plot(args) => plot(&args),
    }
    .map(|()| EXIT_OK)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| mnn::Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn gen(args: &GenArgs) -> Result<()> {
    let d = match args.dataset {
        DatasetKind::Moons => data::gen_moons(args.n, args.noise, args.seed)?,
        DatasetKind::Circles => data::gen_circles(args.n, args.noise, args.factor, args.seed)?,
        DatasetKind::Spirals => data::gen_spirals(args.n, args.noise, args.turns, args.seed)?,
        DatasetKind::SingleBlobs => data::single_blobs(args.n, args.seed)?,
        DatasetKind::DoubleBlobs => data::double_blobs(args.n, args.seed)?,
        DatasetKind::Iris => data::iris(),
    };
    let file = File::create(&args.out).map_err(|e| mnn::Error::File {
        path: args.out.clone(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    data::write_csv(&d, &mut out)?;
    out.flush()?;
    Ok(())
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| mnn::Error::File {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str(&text)?
        }
        None => TrainConfig::default(),
    };
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if let Some(optimizer) = args.optimizer {
        cfg.optimizer = optimizer;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.no_clamp {
        cfg.clamp_inputs = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train_cmd(args: &TrainArgs) -> Result<()> {
    let cfg = train_config(args)?;
    let all = data::load_csv(&args.data)?;
    let (train_set, test_set, scaler) = data::split_standardize(&all, args.train_fraction, cfg.seed)?;
    let shape = NetworkShape::new(all.feature_count() + 1, args.hidden, all.class_count(), args.ticks)?;
    let mask = match &args.mask {
        Some(path) => Mask::load_csv(path)?,
        None => Mask::mesh(&shape),
    };
    let model = build_model(shape, mask, args.activation, InitSpec::UniformScaled, cfg.seed)?;
    let (model, metrics) = train(model, &train_set, &cfg)?;

    let saved = SavedModel {
        model,
        scaler: Some(scaler),
        split: Some(SplitInfo {
            seed: cfg.seed,
            train_fraction: args.train_fraction,
        }),
    };
    model_file::save(&saved, &args.out)?;
    if let Some(path) = &args.metrics {
        write_file(path, metrics.to_csv().as_bytes())?;
    }
    let train_acc = metrics.last().map_or(0.0, |m| m.accuracy);
    println!("train accuracy {train_acc:.6}");
    println!("test accuracy {:.6}", evaluate(&saved.model, &test_set)?);
    Ok(())
}

fn scaler_of(saved: &SavedModel) -> Scaler {
    saved
        .scaler
        .clone()
        .unwrap_or_else(|| Scaler::identity(saved.model.shape().features()))
}

fn eval(args: &EvalArgs) -> Result<()> {
    let saved = model_file::load_model(&args.model)?;
    let all = data::load_csv(&args.data)?;
    let subset: LabeledDataset = match args.split {
        SplitChoice::All => scaler_of(&saved).transform(&all)?,
        SplitChoice::Train | SplitChoice::Test => {
            let split = saved.split.ok_or_else(|| {
                mnn::Error::InvalidArgument("the model file records no split; use --split all".into())
            })?;
            let (train_set, test_set, _) = data::split_standardize(&all, split.train_fraction, split.seed)?;
            if args.split == SplitChoice::Train {
                train_set
            } else {
                test_set
            }
        }
    };
    println!("{:.6}", evaluate(&saved.model, &subset)?);
    Ok(())
}

fn gradcheck_cmd(args: &GradcheckArgs) -> Result<i32> {
    let case = gradcheck::random_case(args.n, args.ticks, args.activation, args.seed)?;
    let report = gradcheck::check_case(&case, args.h, args.tol)?;
    if args.json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!("{report}");
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
}

fn plot(args: &PlotArgs) -> Result<()> {
    let saved = model_file::load_model(&args.model)?;
    let all = data::load_csv(&args.data)?;
    let grid = decision_region_grid(&saved.model, &scaler_of(&saved), &all, args.resolution)?;
    if let Some(path) = &args.pgm {
        write_file(path, &grid.to_pgm())?;
    }
    if let Some(path) = &args.csv {
        write_file(path, grid.to_csv().as_bytes())?;
    }
    Ok(())
}
