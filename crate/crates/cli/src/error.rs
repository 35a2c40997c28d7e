use sixdma::placement::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("placement is infeasible: {}", report(.0))]
    Infeasible(Vec<Violation>),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] sixdma::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::InvalidScene(_) | Failure::Core(sixdma::Error::InvalidScene(_)) => 3,
            Failure::Core(sixdma::Error::SceneParse(_)) => 3,
            Failure::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

fn report(v: &[Violation]) -> String {
    let lines: Vec<String> = v
        .iter()
        .map(|v| {
            format!(
                "surface {} pokes {:.3e} m through the plane of surface {}",
                v.inner, v.depth, v.outer
            )
        })
        .collect();
    format!("{} violation(s)\n  {}", v.len(), lines.join("\n  "))
}
