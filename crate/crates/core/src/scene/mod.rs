//! Triangle-mesh scenes: storage, ray casting, procedural generation and
//! surface discretization.

pub mod bvh;
pub mod gen;
pub mod mesh;
pub mod surface;

pub use bvh::{Bvh, RayHit};
pub use gen::{gen_room_scene, RoomSpec, SceneFamily};
pub use mesh::{load_mesh, save_mesh, TriMesh};
pub use surface::{discretize_surface, SurfaceElements};
