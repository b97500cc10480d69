//! Key files on disk and the one-time signing protocol.
//!
//! `keygen` writes `key.sk` and `key.pub` into a directory. Signing with
//! `path/key.sk` first creates the usage marker `path/key.sk.used` with
//! exclusive-create semantics and syncs it; only then is the signature
//! written. A key whose marker exists never signs again, even if the process
//! died before the signature reached disk.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use wotsplus::{keygen, BitString, Params, PublicKey, SecretKey, Signature};

use crate::digest::digest_message;
use crate::CliError;

pub const SECRET_KEY_FILE: &str = "key.sk";
pub const PUBLIC_KEY_FILE: &str = "key.pub";
pub const MARKER_SUFFIX: &str = ".used";

/// SHA-256 of the public key's canonical encoding, in hex.
pub fn fingerprint(pk: &PublicKey) -> String {
    hex::encode(Sha256::digest(pk.to_bytes()))
}

pub fn marker_path(secret_key: &Path) -> PathBuf {
    let mut s = secret_key.as_os_str().to_owned();
    s.push(MARKER_SUFFIX);
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(io_err(path))
}

fn sync_parent(path: &Path) {
    // Directory fsync is not supported everywhere; the rename is still atomic.
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
}

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))?;
    sync_parent(path);
    Ok(())
}

pub struct KeygenOutput {
    pub secret_path: PathBuf,
    pub public_path: PathBuf,
    pub fingerprint: String,
}

pub fn keygen_to_dir<R: RngCore + CryptoRng>(
    params: &Params,
    dir: &Path,
    rng: &mut R,
) -> Result<KeygenOutput, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (sk, pk) = keygen(params, rng);
    let secret_path = dir.join(SECRET_KEY_FILE);
    let public_path = dir.join(PUBLIC_KEY_FILE);
    // A fresh secret key must not inherit an old usage marker.
    let marker = marker_path(&secret_path);
    match fs::remove_file(&marker) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(io_err(&marker)(e)),
        _ => {}
    }
    write_atomic(&secret_path, &sk.to_bytes())?;
    write_atomic(&public_path, &pk.to_bytes())?;
    Ok(KeygenOutput {
        secret_path,
        public_path,
        fingerprint: fingerprint(&pk),
    })
}

/// Points in the signing protocol where tests can inject a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignStage {
    /// Before the marker file is created.
    CreateMarker,
    /// After the marker exists, before it is synced.
    SyncMarker,
    /// After the marker is durable, before the signature is written.
    WriteSignature,
}

pub trait SignFaults {
    fn check(&self, _stage: SignStage) -> io::Result<()> {
        Ok(())
    }
}

pub struct NoFaults;

impl SignFaults for NoFaults {}

pub struct SignOutput {
    pub message: BitString,
    pub marker: PathBuf,
}

/// Signs the digest of `input` with the key at `secret_path` and writes the
/// signature to `out`. Nothing is written to `out` unless the usage marker
/// was created and synced first.
pub fn sign_file(
    secret_path: &Path,
    input: &Path,
    out: &Path,
    faults: &dyn SignFaults,
) -> Result<SignOutput, CliError> {
    let mut sk = SecretKey::from_bytes(&read_file(secret_path)?)?;
    let marker = marker_path(secret_path);
    if sk.is_used() || marker.exists() {
        return Err(wotsplus::Error::KeyAlreadyUsed.into());
    }
    let message = digest_message(&read_file(input)?, sk.params().m());
    let sig = sk.sign(&message)?;

    faults.check(SignStage::CreateMarker).map_err(io_err(&marker))?;
    let mut f = match OpenOptions::new().write(true).create_new(true).open(&marker) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
            return Err(wotsplus::Error::KeyAlreadyUsed.into())
        }
        Err(e) => return Err(io_err(&marker)(e)),
    };
    faults.check(SignStage::SyncMarker).map_err(io_err(&marker))?;
    (|| {
        writeln!(f, "{}", message.to_hex())?;
        f.sync_all()
    })()
    .map_err(io_err(&marker))?;
    sync_parent(&marker);

    write_atomic(secret_path, &sk.to_bytes())?;
    faults.check(SignStage::WriteSignature).map_err(io_err(out))?;
    write_atomic(out, &sig.to_bytes())?;
    Ok(SignOutput { message, marker })
}

/// Decodes all three inputs and verifies; decoding failures are errors,
/// a failed check is `Ok(false)`.
pub fn verify_files(public: &Path, input: &Path, sig: &Path) -> Result<bool, CliError> {
    let pk = PublicKey::from_bytes(&read_file(public)?)?;
    let sig = Signature::from_bytes(&read_file(sig)?)?;
    let message = digest_message(&read_file(input)?, pk.params().m());
    Ok(pk.verify(&sig, &message))
}
