//! Instruction catalog, compiled programs and the interpreter.

mod dates;
mod exec;
mod instructions;
mod program;

pub use dates::{format_date, parse_date, Date, DateError};
pub use exec::{
    apply_instruction, execute, Callable, ExecError, ExecutionEnv, ProgramResolver, StaticResolver, DEFAULT_FUEL,
};
pub use instructions::{
    apply_builtin, catalog, compiled_regex, escape_template, to_text, InstructionDescriptor, InstructionKind, Op,
    StepError,
};
pub use program::{
    parse_program, CompiledProgram, Dag, DagBuilder, Node, NodeId, ProgramFormatError, SequenceForm, SequenceProgram,
};

pub fn program_size(p: &CompiledProgram) -> usize {
    p.size()
}

pub fn canonical_form(p: &CompiledProgram) -> String {
    p.canonical_form()
}
