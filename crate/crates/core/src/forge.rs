//! Synthetic corpus generator with a ground-truth manifest.
//!
//! Every package gets a project config, an `app.js` that sends its login
//! code to a back-end, an index page of harmless filler, and one page file
//! per planted vulnerability. Plants are written so that each one yields
//! exactly one finding, located in its own file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::Detector;
use crate::pkg::{self, FileEntry, PkgError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Obfuscation {
    /// Literal values written in place.
    Plain,
    /// Minified names and `!0`/`!1` booleans.
    Renamed,
    /// Values built up on a separately named object away from the use.
    Detached,
    /// Values hidden behind conditional expressions.
    Ternary,
}

impl Obfuscation {
    pub const ALL: [Obfuscation; 4] = [
        Obfuscation::Plain,
        Obfuscation::Renamed,
        Obfuscation::Detached,
        Obfuscation::Ternary,
    ];
}

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error("unknown obfuscation level {0:?}")]
    UnknownLevel(String),
    #[error("bad plant spec {0:?}: expected Detector:count[,Detector:count...]")]
    BadPlantSpec(String),
    #[error(transparent)]
    Pkg(#[from] PkgError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FromStr for Obfuscation {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Obfuscation::Plain),
            "renamed" => Ok(Obfuscation::Renamed),
            "detached" => Ok(Obfuscation::Detached),
            "ternary" => Ok(Obfuscation::Ternary),
            _ => Err(ForgeError::UnknownLevel(s.to_string())),
        }
    }
}

/// Parses `BleMisconfig:3,AppSecretString:1`.
pub fn parse_plant_counts(spec: &str) -> Result<BTreeMap<Detector, usize>, ForgeError> {
    let bad = || ForgeError::BadPlantSpec(spec.to_string());
    let mut out = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (d, n) = part.split_once(':').ok_or_else(bad)?;
        let d: Detector = d.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        *out.entry(d).or_insert(0) += n;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plant {
    pub detector: Detector,
    pub file: String,
    /// 1-based line of the planted site.
    pub line: u32,
    pub obfuscation: Obfuscation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPackage {
    pub name: String,
    pub app_id: String,
    pub plants: Vec<Plant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub version: u32,
    pub seed: u64,
    pub packages: Vec<ManifestPackage>,
}

impl FixtureManifest {
    pub fn plant_count(&self) -> usize {
        self.packages.iter().map(|p| p.plants.len()).sum()
    }

    pub fn count_by_detector(&self) -> BTreeMap<Detector, usize> {
        let mut m = BTreeMap::new();
        for p in self.packages.iter().flat_map(|p| &p.plants) {
            *m.entry(p.detector).or_insert(0) += 1;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct ForgeSpec {
    pub seed: u64,
    pub clean: usize,
    /// Packages with random plants; ignored when `counts` is set.
    pub planted: usize,
    pub min_plants: usize,
    pub max_plants: usize,
    /// Exact number of plants per detector.
    pub counts: Option<BTreeMap<Detector, usize>>,
    /// Levels to draw from; empty means all.
    pub levels: Vec<Obfuscation>,
}

impl Default for ForgeSpec {
    fn default() -> Self {
        ForgeSpec {
            seed: 0,
            clean: 150,
            planted: 50,
            min_plants: 2,
            max_plants: 4,
            counts: None,
            levels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForgedPackage {
    pub name: String,
    pub app_id: String,
    pub entries: Vec<FileEntry>,
    pub plants: Vec<Plant>,
}

impl ForgedPackage {
    pub fn to_bytes(&self) -> Result<Vec<u8>, PkgError> {
        pkg::pack(&self.entries)
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub packages: Vec<ForgedPackage>,
    pub manifest: FixtureManifest,
}

impl Corpus {
    /// Writes `<name>.mapkg` per package plus the manifest.
    pub fn write_to(&self, dir: &Path) -> Result<(), ForgeError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| ForgeError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for p in &self.packages {
            let path = dir.join(format!("{}.{}", p.name, pkg::EXTENSION));
            std::fs::write(&path, p.to_bytes()?).map_err(io(&path))?;
        }
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, json + "\n").map_err(io(&path))?;
        Ok(())
    }
}

/// Builds the corpus. Output depends only on `spec`.
pub fn forge(spec: &ForgeSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let levels = if spec.levels.is_empty() {
        Obfuscation::ALL.to_vec()
    } else {
        spec.levels.clone()
    };

    let groups: Vec<Vec<Detector>> = match &spec.counts {
        Some(counts) => group_counts(counts, spec, &mut rng),
        None => group_random(spec, &mut rng),
    };

    let total = spec.clean + groups.len();
    let mut kinds: Vec<Option<Vec<Detector>>> = groups.into_iter().map(Some).collect();
    kinds.extend(std::iter::repeat_n(None, spec.clean));
    kinds.shuffle(&mut rng);

    let width = total.to_string().len().max(4);
    let mut packages = Vec::with_capacity(total);
    for (i, plants) in kinds.into_iter().enumerate() {
        let name = format!("pkg-{i:0width$}");
        let pkg_seed: u64 = rng.random();
        let mut prng = ChaCha8Rng::seed_from_u64(pkg_seed);
        let planned: Vec<(Detector, Obfuscation)> = plants
            .unwrap_or_default()
            .into_iter()
            .map(|d| (d, *levels.choose(&mut prng).expect("levels non-empty")))
            .collect();
        packages.push(build_package(name, &planned, &mut prng));
    }
    let manifest = FixtureManifest {
        version: 1,
        seed: spec.seed,
        packages: packages
            .iter()
            .map(|p| ManifestPackage {
                name: p.name.clone(),
                app_id: p.app_id.clone(),
                plants: p.plants.clone(),
            })
            .collect(),
    };
    Corpus { packages, manifest }
}

/// At most one cross-app and one private-share plant fit in a package,
/// since each of those is a package-level property.
fn fits(group: &[Detector], d: Detector) -> bool {
    !matches!(
        d,
        Detector::MissingCrossAppCheck | Detector::MissingPrivateShareCheck
    ) || !group.contains(&d)
}

fn group_random(spec: &ForgeSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<Detector>> {
    let lo = spec.min_plants.max(1);
    let hi = spec.max_plants.max(lo);
    let mut next = 0usize;
    (0..spec.planted)
        .map(|_| {
            let k = rng.random_range(lo..=hi);
            let mut g = Vec::with_capacity(k);
            // walk the detector list first so small corpora still cover all classes
            let mut d = Detector::ALL[next % Detector::ALL.len()];
            next += 1;
            while g.len() < k {
                if fits(&g, d) {
                    g.push(d);
                }
                d = *Detector::ALL.choose(rng).expect("non-empty");
            }
            g
        })
        .collect()
}

fn group_counts(
    counts: &BTreeMap<Detector, usize>,
    spec: &ForgeSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Detector>> {
    let mut pool: Vec<Detector> = counts
        .iter()
        .flat_map(|(d, n)| std::iter::repeat_n(*d, *n))
        .collect();
    pool.shuffle(rng);
    let lo = spec.min_plants.max(1);
    let hi = spec.max_plants.max(lo);
    let mut groups = Vec::new();
    while !pool.is_empty() {
        let k = rng.random_range(lo..=hi);
        let mut g = Vec::new();
        let mut rest = Vec::new();
        for d in pool.drain(..) {
            if g.len() < k && fits(&g, d) {
                g.push(d);
            } else {
                rest.push(d);
            }
        }
        pool = rest;
        groups.push(g);
    }
    groups
}

// ---- code generation ----

const WORDS: &[&str] = &[
    "goods", "order", "cart", "shop", "coupon", "venue", "course", "menu", "ticket", "member",
    "points", "banner", "notice", "store", "city", "topic", "album", "event", "room", "device",
];
const HOSTS: &[&str] = &[
    "mall", "api", "shop", "m", "app", "mp", "www", "service", "wxa", "gw",
];
const TLDS: &[&str] = &["com", "cn", "net", "com.cn", "io"];
const SHORT: &[&str] = &["e", "t", "n", "o", "a", "i", "r", "s", "c", "u"];
const ENCRYPTED_CALL_APIS: &[&str] = &["getWeRunData", "getShareInfo", "getGroupEnterInfo"];
const GETTER_PATHS: &[&str] = &[
    "getSessionKey",
    "get_session_key",
    "Getsessionkey",
    "getNewSessionKey",
    "GetSessionkey",
    "session_key",
    "sessionKey",
    "get_session_key.json",
    "refreshSessionKey",
];
const DUPLICATION_PATHS: &[&str] = &[
    "/wechat/code2session",
    "/auth/jscode2session",
    "/api/wx/jscode2session",
    "/sns/code2session",
];
const SAFE_PATHS: &[&str] = &[
    "/api/goods/list",
    "/api/user/getInfo",
    "/images/banner.png",
    "/api/order/create",
    "/api/cart/update",
    "/static/logo.png",
    "/api/notice/latest",
    "/api/member/points",
];

fn hex(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).expect("hex digit"))
        .collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty list")
}

fn ident(rng: &mut ChaCha8Rng) -> String {
    let w = pick(rng, WORDS);
    let n: u32 = rng.random_range(0..100);
    format!("{w}{n}")
}

fn host(rng: &mut ChaCha8Rng) -> String {
    format!(
        "https://{}.{}{}.{}",
        pick(rng, HOSTS),
        pick(rng, WORDS),
        rng.random_range(1..99),
        pick(rng, TLDS)
    )
}

/// A random 32-hex secret that is not all digits.
fn secret(rng: &mut ChaCha8Rng) -> String {
    loop {
        let s = hex(rng, 32);
        if s.chars().any(|c| c.is_ascii_alphabetic()) {
            return s;
        }
    }
}

struct PlantCode {
    /// Statements before `Page(...)`.
    top: String,
    /// Statements inside the page method.
    body: String,
    /// Extra page properties.
    props: String,
    /// Text on the line that the finding points at.
    needle: String,
    secret: Option<String>,
}

impl PlantCode {
    fn new(needle: impl Into<String>) -> Self {
        PlantCode {
            top: String::new(),
            body: String::new(),
            props: String::new(),
            needle: needle.into(),
            secret: None,
        }
    }
}

fn plant_code(d: Detector, level: Obfuscation, app_id: &str, rng: &mut ChaCha8Rng) -> PlantCode {
    use Obfuscation::*;
    let uuid = format!(
        "{}-0000-1000-8000-{}",
        hex(rng, 8).to_uppercase(),
        hex(rng, 12).to_uppercase()
    );
    match d {
        Detector::BleMisconfig => match level {
            Plain => {
                let mut p = PlantCode::new("addService");
                let perm = if rng.random_bool(0.3) {
                    "properties: {read: true, write: true}".to_string()
                } else {
                    format!(
                        "permission: {{readEncryptionRequired: {}, writeEncryptionRequired: false}}",
                        rng.random_bool(0.5)
                    )
                };
                p.body = format!(
                    "    wx.createBLEPeripheralServer({{\n      success: function (res) {{\n        res.server.addService({{\n          service: {{uuid: \"{uuid}\", characteristics: [{{uuid: \"{uuid}\", {perm}}}]}}\n        }});\n      }}\n    }});\n"
                );
                p
            }
            Renamed => {
                let mut p = PlantCode::new("addService");
                let (a, b) = (pick(rng, SHORT), "l");
                p.body = format!(
                    "    var {a} = that.data.server;\n    {a}.addService({{service: {{uuid: \"{uuid}\", readEncryptionRequired: !1, writeEncryptionRequired: !0}}}}, function ({b}) {{ that.setData({{ok: {b}}}); }});\n"
                );
                p
            }
            Detached => {
                let mut p = PlantCode::new("addService(");
                let obj = ident(rng);
                p.body = format!(
                    "    var a = this.data.server;\n    if (!a) {{\n      return;\n    }}\n    b[\"a\"]({{title: \"{}\"}});\n    var {obj} = {{uuid: \"{uuid}\"}};\n    {obj}.characteristics = [];\n    {obj}.writeEncryptionRequired = !1;\n    {obj}.readEncryptionRequired = false;\n    a.addService({obj});\n",
                    pick(rng, WORDS)
                );
                p
            }
            Ternary => {
                let mut p = PlantCode::new("addService(");
                p.body = format!(
                    "    var s = t && t.secure ? !0 : !1;\n    var q = {{uuid: \"{uuid}\", readEncryptionRequired: s, writeEncryptionRequired: s}};\n    that.data.server.addService({{service: q}});\n"
                );
                p
            }
        },
        Detector::MissingCrossAppCheck => match level {
            Plain => {
                let mut p = PlantCode::new("extraData");
                p.body = "    var o = wx.getEnterOptionsSync();\n    that.setData({extra: o.referrerInfo.extraData});\n".into();
                p
            }
            Renamed => {
                let mut p = PlantCode::new("extraData");
                p.body = "    var n = t.referrerInfo;\n    var i = n.extraData;\n    that.setData({coupon: i.coupon});\n".into();
                p
            }
            Detached => {
                let mut p = PlantCode::new("extraData");
                p.body = format!(
                    "    var {0} = t.referrerInfo;\n    that.setData({{from: {1}}});\n    that.setData({{payload: {0}[\"extraData\"]}});\n",
                    ident(rng),
                    rng.random_range(1000..2000)
                );
                p
            }
            Ternary => {
                let mut p = PlantCode::new("extraData");
                let partner = pick(rng, WORDS);
                p.body = format!(
                    "    if (t.referrerInfo && t.referrerInfo.appId != \"{partner}\") {{\n      return;\n    }}\n    var d = t.referrerInfo ? t.referrerInfo.extraData : null;\n    that.setData({{d: d}});\n"
                );
                p
            }
        },
        Detector::MissingPrivateShareCheck => match level {
            Plain => {
                let mut p = PlantCode::new("updateShareMenu");
                p.body = format!(
                    "    wx.updateShareMenu({{withShareTicket: true, isPrivateMessage: true, activityId: \"{}\"}});\n",
                    hex(rng, 16)
                );
                p
            }
            Renamed => {
                let mut p = PlantCode::new("updateShareMenu");
                p.body = "    wx.updateShareMenu({withShareTicket: !0, isPrivateMessage: !0});\n".into();
                p
            }
            Detached => {
                let mut p = PlantCode::new("updateShareMenu");
                let m = ident(rng);
                p.body = format!(
                    "    var {m} = {{withShareTicket: !0}};\n    {m}.templateInfo = {{parameterList: []}};\n    {m}.isPrivateMessage = !0;\n    wx.updateShareMenu({m});\n"
                );
                p
            }
            Ternary => {
                let mut p = PlantCode::new("updateShareMenu");
                p.body = "    wx.updateShareMenu({withShareTicket: true, isPrivateMessage: t && t.private ? !0 : !1});\n".into();
                p
            }
        },
        Detector::AppSecretString => {
            let s = secret(rng);
            let mut p = PlantCode::new(s.clone());
            p.top = match level {
                Plain => format!("var appSecret = \"{s}\";\n"),
                Renamed => format!("var {} = \"{s}\";\n", pick(rng, SHORT)),
                Detached => format!(
                    "var conf = {{\n  appid: \"{app_id}\",\n  name: \"{}\",\n  key: \"{s}\"\n}};\n",
                    pick(rng, WORDS)
                ),
                Ternary => format!("var sk = getApp().debug ? \"{s}\" : \"\";\n"),
            };
            p.secret = Some(s);
            p
        }
        Detector::AppSecretInUrl => {
            let s = secret(rng);
            let mut p = PlantCode::new(s.clone());
            match level {
                Plain => {
                    p.body = format!(
                        "    wx.login({{\n      success: function (r) {{\n        wx.request({{url: \"https://api.weixin.qq.com/sns/jscode2session?appid={app_id}&secret={s}&js_code=\" + r.code + \"&grant_type=authorization_code\"}});\n      }}\n    }});\n"
                    )
                }
                Renamed => {
                    p.top = format!(
                        "var u = \"https://api.weixin.qq.com/sns/jscode2session?appid={app_id}&secret={s}\";\n"
                    )
                }
                Detached => {
                    p.top = format!(
                        "// https://api.weixin.qq.com/sns/jscode2session?appid={app_id}&secret={s}&js_code=JSCODE\nvar {} = {};\n",
                        ident(rng),
                        rng.random_range(1..50)
                    )
                }
                Ternary => {
                    p.top = format!(
                        "var path = getApp().v2 ? \"/sns/jscode2session?secret={s}&appid=\" : \"\";\n"
                    )
                }
            }
            p.secret = Some(s);
            p
        }
        Detector::SessionKeyUrl => {
            let h = host(rng);
            let dir = pick(rng, WORDS);
            match level {
                Plain => {
                    let path = format!("/{dir}/{}", pick(rng, GETTER_PATHS));
                    let mut p = PlantCode::new(path.clone());
                    p.body = format!(
                        "    wx.request({{\n      url: \"{h}{path}\",\n      data: {{code: t.code}},\n      success: function (r) {{\n        wx.setStorageSync(\"sk\", r.data);\n      }}\n    }});\n"
                    );
                    p
                }
                Renamed => {
                    let path = pick(rng, DUPLICATION_PATHS).to_string();
                    let mut p = PlantCode::new(path.clone());
                    p.body = format!(
                        "    var e = \"{h}\";\n    wx.request({{url: e + \"{path}\", data: {{js_code: t.code}}}});\n"
                    );
                    p
                }
                Detached => {
                    let path = format!("/entry/{dir}/{}", pick(rng, GETTER_PATHS));
                    let mut p = PlantCode::new(path.clone());
                    p.top = format!("var api = {{\n  sk: \"{path}\",\n  list: \"{}\"\n}};\n", pick(rng, SAFE_PATHS));
                    p.body = format!("    wx.request({{url: \"{h}\" + api.sk}});\n");
                    p
                }
                Ternary => {
                    let path = format!("/{dir}/pay.php?do=getSession");
                    let mut p = PlantCode::new(path.clone());
                    p.body = format!(
                        "    var h = \"{h}\";\n    wx.request({{url: t && t.pay ? h + \"{path}\" : h + \"/{dir}/index\"}});\n"
                    );
                    p
                }
            }
        }
        Detector::SessionKeyMissingNetwork => match level {
            Plain => {
                let mut p = PlantCode::new("getWeRunData");
                p.body = "    wx.getWeRunData({\n      success: function (r) {\n        that.setData({run: r.encryptedData, iv: r.iv});\n      }\n    });\n".into();
                p
            }
            Renamed => {
                let api = pick(rng, ENCRYPTED_CALL_APIS);
                let mut p = PlantCode::new(api);
                p.body = format!(
                    "    wx.{api}({{shareTicket: t.shareTicket, success: e => that.setData({{g: e.encryptedData}})}});\n"
                );
                p
            }
            Detached => {
                let api = pick(rng, ENCRYPTED_CALL_APIS);
                let mut p = PlantCode::new(format!("wx.{api}"));
                let f = ident(rng);
                p.top = format!("function {f}(r) {{\n  wx.setStorageSync(\"enc\", r.encryptedData);\n}}\n");
                p.body = format!("    var o = {{shareTicket: t.shareTicket, success: {f}}};\n    wx.{api}(o);\n");
                p
            }
            Ternary => {
                let mut p = PlantCode::new("getPhoneNumber:");
                p.props = "  getPhoneNumber: function (e) {\n    var d = e.detail;\n    this.setData({phone: d.encryptedData ? d.encryptedData : \"\"});\n  },\n".into();
                p
            }
        },
    }
}

fn page_file(code: &PlantCode, method: &str) -> String {
    let mut s = String::new();
    s.push_str(&code.top);
    s.push_str("Page({\n  data: {ready: false},\n");
    s.push_str(&code.props);
    let _ = write!(
        s,
        "  {method}: function (t) {{\n    var that = this;\n{}    that.setData({{ready: true}});\n  }}\n}});\n",
        code.body
    );
    s
}

fn line_of(text: &str, needle: &str) -> u32 {
    text.lines()
        .position(|l| l.contains(needle))
        .map(|i| i as u32 + 1)
        .unwrap_or_else(|| panic!("needle {needle:?} missing from plant"))
}

/// Harmless page content. `safe_cross_app` / `safe_share` add the checked
/// versions of the two package-level patterns.
fn filler(rng: &mut ChaCha8Rng, host_var: &str, safe_cross_app: bool, safe_share: bool, app_id: &str) -> String {
    let mut methods: Vec<String> = Vec::new();
    let w = pick(rng, WORDS);
    methods.push(format!(
        "  onLoad: function (options) {{\n    var that = this;\n    wx.request({{\n      url: {host_var} + \"{}\",\n      data: {{page: 1, size: {}}},\n      success: function (res) {{\n        that.setData({{{w}: res.data.list}});\n      }}\n    }});\n  }}",
        pick(rng, SAFE_PATHS),
        rng.random_range(5..30)
    ));
    if rng.random_bool(0.7) {
        methods.push(format!(
            "  onShow: function () {{\n    var n = this.data.{w}.length;\n    if (n > 0 && n < {}) {{\n      this.setData({{more: true}});\n    }} else {{\n      this.setData({{more: false}});\n    }}\n  }}",
            rng.random_range(10..99)
        ));
    }
    if rng.random_bool(0.5) {
        // hashes and ids that are not 32 hex characters long
        methods.push(format!(
            "  meta: {{\n    etag: \"{}\",\n    digest: \"{}\",\n    short: \"{}\",\n    id: \"{}-{}-{}-{}-{}\",\n    upper: \"{}\"\n  }}",
            hex(rng, 40),
            hex(rng, 64),
            hex(rng, 31),
            hex(rng, 8),
            hex(rng, 4),
            hex(rng, 4),
            hex(rng, 4),
            hex(rng, 12),
            hex(rng, 32).to_uppercase().replace(|c: char| c.is_ascii_digit(), "F")
        ));
    }
    if rng.random_bool(0.4) {
        methods.push(format!(
            "  openDevice: function () {{\n    var that = this;\n    wx.createBLEPeripheralServer({{\n      success: function (res) {{\n        res.server.addService({{service: {{uuid: \"{}\", readEncryptionRequired: true, writeEncryptionRequired: true}}}});\n      }}\n    }});\n  }}",
            hex(rng, 8).to_uppercase()
        ));
    }
    if rng.random_bool(0.4) {
        methods.push(format!(
            "  syncRun: function () {{\n    wx.getWeRunData({{\n      success: function (r) {{\n        wx.request({{url: {host_var} + \"/api/run/decrypt\", method: \"POST\", data: {{data: r.encryptedData, iv: r.iv}}}});\n      }}\n    }});\n  }}"
        ));
    }
    if rng.random_bool(0.3) {
        methods.push(format!(
            "  getPhoneNumber: function (e) {{\n    wx.request({{url: {host_var} + \"/api/user/phone\", data: e.detail}});\n  }}"
        ));
    }
    if rng.random_bool(0.3) {
        methods.push("  onShareAppMessage: function () {\n    wx.updateShareMenu({withShareTicket: true});\n    return {title: \"share\"};\n  }".to_string());
    }
    if safe_cross_app {
        methods.push(format!(
            "  onEnter: function (t) {{\n    if (t.referrerInfo && t.referrerInfo.appId === \"{app_id}\") {{\n      this.setData({{extra: t.referrerInfo.extraData}});\n    }}\n  }}"
        ));
    }
    if safe_share {
        methods.push("  onShareEnter: function (t) {\n    wx.updateShareMenu({withShareTicket: true, isPrivateMessage: true});\n    wx.authPrivateMessage({\n      shareTicket: t.shareTicket,\n      success: function (r) {\n        getApp().globalData.valid = r.valid;\n      }\n    });\n  }".to_string());
    }
    methods.shuffle(rng);
    format!(
        "var {host_var} = \"{}\";\nPage({{\n  data: {{{w}: [], more: false}},\n{}\n}});\n",
        host(rng),
        methods.join(",\n")
    )
}

fn build_package(
    name: String,
    planned: &[(Detector, Obfuscation)],
    rng: &mut ChaCha8Rng,
) -> ForgedPackage {
    let app_id = format!("wx{}", hex(rng, 16));
    let mut entries = Vec::new();
    let mut pages = vec!["pages/index/index".to_string()];
    let mut plants = Vec::new();
    let mut page_files = Vec::new();
    for (i, &(d, level)) in planned.iter().enumerate() {
        let code = plant_code(d, level, &app_id, rng);
        let page = format!("pages/{}{i}/{}{i}", pick(rng, WORDS), "index");
        let file = format!("{page}.js");
        let method = if rng.random_bool(0.5) { "onLoad" } else { "onShow" };
        let text = page_file(&code, method);
        plants.push(Plant {
            detector: d,
            file: file.clone(),
            line: line_of(&text, &code.needle),
            obfuscation: level,
            secret: code.secret.clone(),
        });
        pages.push(page);
        page_files.push((file, text));
    }
    let has = |d: Detector| planned.iter().any(|(p, _)| *p == d);
    let safe_cross = !has(Detector::MissingCrossAppCheck) && rng.random_bool(0.5);
    let safe_share = !has(Detector::MissingPrivateShareCheck) && rng.random_bool(0.5);

    let project = serde_json::json!({"appid": app_id, "projectname": name, "compileType": "miniprogram"});
    entries.push(FileEntry::new(
        "project.config.json",
        serde_json::to_string_pretty(&project).expect("json") + "\n",
    ));
    let app_json = serde_json::json!({"pages": pages, "window": {"navigationBarTitleText": name}});
    entries.push(FileEntry::new(
        "app.json",
        serde_json::to_string_pretty(&app_json).expect("json") + "\n",
    ));
    entries.push(FileEntry::new(
        "app.js",
        format!(
            "var HOST = \"{}\";\nApp({{\n  onLaunch: function () {{\n    var that = this;\n    wx.login({{\n      success: function (r) {{\n        wx.request({{\n          url: HOST + \"/user/login\",\n          data: {{code: r.code}},\n          success: function (res) {{\n            that.globalData.token = res.data.token;\n          }}\n        }});\n      }}\n    }});\n  }},\n  globalData: {{token: null}}\n}});\n",
            host(rng)
        ),
    ));
    entries.push(FileEntry::new(
        "pages/index/index.js",
        filler(rng, "BASE", safe_cross, safe_share, &app_id),
    ));
    entries.push(FileEntry::new(
        "pages/index/index.wxml",
        "<view class=\"page\"><button open-type=\"getPhoneNumber\" bindgetphonenumber=\"getPhoneNumber\">login</button></view>\n",
    ));
    if rng.random_bool(0.5) {
        entries.push(FileEntry::new(
            "utils/util.js",
            format!(
                "function formatNumber(n) {{\n  return n < 10 ? \"0\" + n : \"\" + n;\n}}\nvar {} = {{format: formatNumber, version: \"{}.{}\"}};\n",
                ident(rng),
                rng.random_range(1..5),
                rng.random_range(0..20)
            ),
        ));
    }
    for (file, text) in page_files {
        entries.push(FileEntry::new(file, text));
    }
    ForgedPackage {
        name,
        app_id,
        entries,
        plants,
    }
}
