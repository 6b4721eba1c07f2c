//! Compiles and runs the Rust snippets of the guide in `book/src` as
//! doc-tests.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(corpus, "corpus.md");
chapter!(sampling, "sampling.md");
chapter!(annotation, "annotation.md");
chapter!(features, "features.md");
chapter!(models, "models.md");
chapter!(evaluation, "evaluation.md");
chapter!(analysis, "analysis.md");
chapter!(cli, "cli.md");
chapter!(server, "server.md");
