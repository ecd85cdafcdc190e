//! Surface syntax, core AST and syntactic analyses.

pub mod analysis;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod print;

pub use analysis::{desugar, fresh_variant, mod_set, subst, FreeVars, Subst, SubstError};
pub use ast::*;
pub use parser::{parse_bool, parse_command, parse_expr, parse_factored, parse_program, ParseError};
pub use print::print_program;

use crate::verify::AnnotationSet;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    /// Desugared body.
    pub body: Command,
    /// Body as written, with `if` and `while` intact; runs deterministically
    /// except at `*` choices and observable `local` initial values.
    pub surface: Command,
    pub annotations: AnnotationSet,
}

impl Program {
    pub fn kinds(&self) -> BTreeMap<Name, DeclKind> {
        self.decls.iter().map(|d| (d.name.clone(), d.kind)).collect()
    }

    pub fn scalars(&self) -> Vec<Name> {
        self.decls.iter().filter(|d| d.kind == DeclKind::Scalar).map(|d| d.name.clone()).collect()
    }

    pub fn arrays(&self) -> Vec<Name> {
        self.decls.iter().filter(|d| d.kind == DeclKind::Array).map(|d| d.name.clone()).collect()
    }
}
