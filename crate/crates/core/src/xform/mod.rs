//! Model-to-model transformations: BOM import, platform-independent process
//! generation, and assembly-sequence enumeration.

mod bom;
mod generate;
mod sequences;

pub use bom::{import_bom, BillOfMaterials, BomError, BomLine, BomTag, Imported, LiaisonList, LiaisonsTag};
pub use generate::{generate_pi_apm, ConstraintEdge, ConstraintSet, ConstraintsTag, GenerateError, Template};
pub use sequences::{
    count_sequences, enumerate_sequences, level_activity_order, SequenceEnumeration, SequenceError, COUNT_CAP,
};
