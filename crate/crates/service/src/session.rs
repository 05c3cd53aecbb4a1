use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use corebox::depthref::{DepthAssignment, DepthSpec};
use corebox::extraction::{extract_columns, ColumnCrop, ExtractionReport, FilterConfig};
use corebox::imagery::{self, GrayMask, ImageryError, LabelMap, RasterImage};
use serde::{Deserialize, Serialize};

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// One image under review. The report, crops and depths always describe the
/// current mask: replacing the mask clears them.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub source_name: Option<String>,
    pub image: Arc<RasterImage>,
    pub mask: Arc<GrayMask>,
    pub labels: LabelMap,
    pub config: FilterConfig,
    pub report: Option<ExtractionReport>,
    pub crops: Vec<ColumnCrop>,
    pub depth_spec: Option<DepthSpec>,
    pub depths: Option<DepthAssignment>,
    pub created: u64,
    pub modified: u64,
}

impl Session {
    pub fn new(image: RasterImage, mask: Option<GrayMask>, labels: LabelMap) -> Result<Self, ImageryError> {
        let mask = match mask {
            Some(m) if m.dimensions() != image.dimensions() => {
                return Err(ImageryError::InvalidRaster(format!(
                    "mask is {}x{} but image is {}x{}",
                    m.width(),
                    m.height(),
                    image.width(),
                    image.height()
                )))
            }
            Some(m) => m,
            None => GrayMask::background(image.width(), image.height()),
        };
        let t = now();
        Ok(Self {
            id: uuid::Uuid::new_v4().simple().to_string(),
            source_name: None,
            image: Arc::new(image),
            mask: Arc::new(mask),
            labels,
            config: FilterConfig::default(),
            report: None,
            crops: Vec::new(),
            depth_spec: None,
            depths: None,
            created: t,
            modified: t,
        })
    }

    pub fn replace_mask(&mut self, mask: GrayMask) -> Result<(), ImageryError> {
        if mask.dimensions() != self.image.dimensions() {
            return Err(ImageryError::InvalidRaster(format!(
                "mask is {}x{} but image is {}x{}",
                mask.width(),
                mask.height(),
                self.image.width(),
                self.image.height()
            )));
        }
        self.mask = Arc::new(mask);
        self.report = None;
        self.crops.clear();
        self.depths = None;
        self.modified = now();
        Ok(())
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            id: self.id.clone(),
            source_name: self.source_name.clone(),
            width: self.image.width(),
            height: self.image.height(),
            labels: self.labels.clone(),
            config: self.config.clone(),
            extracted: self.report.is_some(),
            report: self.report.clone(),
            depth_spec: self.depth_spec,
            depths: self.depths.clone(),
            created: self.created,
            modified: self.modified,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub source_name: Option<String>,
    pub width: u32,
    pub height: u32,
    pub labels: LabelMap,
    pub config: FilterConfig,
    pub extracted: bool,
    pub report: Option<ExtractionReport>,
    pub depth_spec: Option<DepthSpec>,
    pub depths: Option<DepthAssignment>,
    pub created: u64,
    pub modified: u64,
}

pub type SharedSession = Arc<tokio::sync::Mutex<Session>>;

struct Entry {
    session: SharedSession,
    last_used: u64,
}

#[derive(Default)]
struct Store {
    sessions: HashMap<String, Entry>,
    tick: u64,
}

/// In-memory session map with least-recently-used eviction. With a spool
/// directory every change is written through to disk, so evicted sessions
/// are reloaded transparently on next access.
pub struct Workspace {
    store: Mutex<Store>,
    capacity: usize,
    spool: Option<PathBuf>,
}

impl Workspace {
    pub fn new(capacity: usize, spool: Option<PathBuf>) -> io::Result<Self> {
        if let Some(dir) = &spool {
            fs::create_dir_all(dir)?;
        }
        Ok(Self { store: Mutex::new(Store::default()), capacity: capacity.max(1), spool })
    }

    pub fn len(&self) -> usize {
        self.store.lock().expect("workspace lock").sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, session: Session) -> io::Result<SharedSession> {
        self.persist(&session)?;
        let id = session.id.clone();
        let shared = Arc::new(tokio::sync::Mutex::new(session));
        self.put(id, shared.clone());
        Ok(shared)
    }

    fn put(&self, id: String, session: SharedSession) {
        let mut store = self.store.lock().expect("workspace lock");
        store.tick += 1;
        let tick = store.tick;
        store.sessions.insert(id, Entry { session, last_used: tick });
        while store.sessions.len() > self.capacity {
            let oldest = store.sessions.iter().min_by_key(|(_, e)| e.last_used).map(|(k, _)| k.clone());
            match oldest {
                Some(k) => store.sessions.remove(&k),
                None => break,
            };
        }
    }

    /// Looks a session up, reloading it from the spool if it was evicted.
    pub fn get(&self, id: &str) -> Option<SharedSession> {
        {
            let mut store = self.store.lock().expect("workspace lock");
            store.tick += 1;
            let tick = store.tick;
            if let Some(e) = store.sessions.get_mut(id) {
                e.last_used = tick;
                return Some(e.session.clone());
            }
        }
        let session = self.load(id)?;
        let shared = Arc::new(tokio::sync::Mutex::new(session));
        self.put(id.to_string(), shared.clone());
        Some(shared)
    }

    pub fn remove(&self, id: &str) -> bool {
        let in_memory = self.store.lock().expect("workspace lock").sessions.remove(id).is_some();
        let on_disk = self.spool_path(id).is_some_and(|p| p.exists() && fs::remove_dir_all(p).is_ok());
        in_memory || on_disk
    }

    fn spool_path(&self, id: &str) -> Option<PathBuf> {
        let dir = self.spool.as_ref()?;
        // Only well-formed ids ever reach the file system.
        uuid::Uuid::try_parse(id).ok()?;
        Some(dir.join(id))
    }

    /// Writes the session to the spool, if one is configured.
    pub fn persist(&self, session: &Session) -> io::Result<()> {
        let Some(dir) = self.spool_path(&session.id) else { return Ok(()) };
        fs::create_dir_all(&dir)?;
        let image_path = dir.join("image.png");
        if !image_path.exists() {
            imagery::save_image(&session.image, &image_path).map_err(io::Error::other)?;
        }
        imagery::save_mask(&session.mask, dir.join("mask.png")).map_err(io::Error::other)?;
        let meta = SpoolMeta {
            id: session.id.clone(),
            source_name: session.source_name.clone(),
            labels: session.labels.clone(),
            config: session.config.clone(),
            report: session.report.clone(),
            depth_spec: session.depth_spec,
            depths: session.depths.clone(),
            created: session.created,
            modified: session.modified,
        };
        let tmp = dir.join("session.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&meta)?)?;
        fs::rename(tmp, dir.join("session.json"))
    }

    fn load(&self, id: &str) -> Option<Session> {
        let dir = self.spool_path(id)?;
        load_spooled(&dir).ok()
    }
}

#[derive(Serialize, Deserialize)]
struct SpoolMeta {
    id: String,
    source_name: Option<String>,
    labels: LabelMap,
    config: FilterConfig,
    report: Option<ExtractionReport>,
    depth_spec: Option<DepthSpec>,
    depths: Option<DepthAssignment>,
    created: u64,
    modified: u64,
}

fn load_spooled(dir: &Path) -> Result<Session, Box<dyn std::error::Error>> {
    let meta: SpoolMeta = serde_json::from_slice(&fs::read(dir.join("session.json"))?)?;
    let image = imagery::load_image(dir.join("image.png"))?;
    let mask = imagery::load_mask(dir.join("mask.png"), &meta.labels)?;
    let crops = match &meta.report {
        Some(r) => extract_columns(&image, &r.kept)?,
        None => Vec::new(),
    };
    Ok(Session {
        id: meta.id,
        source_name: meta.source_name,
        image: Arc::new(image),
        mask: Arc::new(mask),
        labels: meta.labels,
        config: meta.config,
        report: meta.report,
        crops,
        depth_spec: meta.depth_spec,
        depths: meta.depths,
        created: meta.created,
        modified: meta.modified,
    })
}
