//! Packet layouts for the four codec versions and the `CQNV` stream
//! container.
//!
//! A packet covers 40 ms (four frames). Fields are written MSB-first in the
//! order: LSP indices, pitch/energy indices, voicing bits for frames 0..3,
//! spare bit.
//!
//! | version      | LSP      | pitch/energy | voicing | spare | total |
//! |--------------|----------|--------------|---------|-------|-------|
//! | Codec2 1200  | 9+9+9    | 8+8          | 4       | 1     | 48    |
//! | CQNV v1      | 9+7+7    | 8+8          | 4       | 1     | 44    |
//! | CQNV v2      | 9+9+9    | 6+6          | 4       | 1     | 44    |
//! | CQNV v3      | 9+7+7    | 6+6          | 4       | 1     | 40    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizers::{LspMode, PitchEnergyMode, QuantizerProfile};

pub const PACKET_MS: u32 = 40;
pub const FRAMES_PER_PACKET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodecVersion {
    Codec2_1200,
    CqnvV1,
    CqnvV2,
    CqnvV3,
}

impl CodecVersion {
    pub const ALL: [CodecVersion; 4] = [
        CodecVersion::Codec2_1200,
        CodecVersion::CqnvV1,
        CodecVersion::CqnvV2,
        CodecVersion::CqnvV3,
    ];

    pub fn id(self) -> u8 {
        match self {
            CodecVersion::Codec2_1200 => 0,
            CodecVersion::CqnvV1 => 1,
            CodecVersion::CqnvV2 => 2,
            CodecVersion::CqnvV3 => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.id() == id)
            .ok_or(Error::UnsupportedVersion {
                what: "codec",
                version: id,
            })
    }

    pub fn profile(self) -> QuantizerProfile {
        let (lsp, pitch_energy) = match self {
            CodecVersion::Codec2_1200 => (LspMode::Fine27, PitchEnergyMode::Fine16),
            CodecVersion::CqnvV1 => (LspMode::Coarse23, PitchEnergyMode::Fine16),
            CodecVersion::CqnvV2 => (LspMode::Fine27, PitchEnergyMode::Coarse12),
            CodecVersion::CqnvV3 => (LspMode::Coarse23, PitchEnergyMode::Coarse12),
        };
        QuantizerProfile { lsp, pitch_energy }
    }

    pub fn from_profile(profile: QuantizerProfile) -> Self {
        Self::ALL
            .into_iter()
            .find(|v| v.profile() == profile)
            .expect("every profile maps to a version")
    }

    pub fn lsp_widths(self) -> [u32; 3] {
        self.profile().lsp.field_widths()
    }

    pub fn pe_width(self) -> u32 {
        self.profile().pitch_energy.index_bits()
    }

    pub fn packet_bits(self) -> u32 {
        let p = self.profile();
        p.lsp_bits() + p.pe_bits() + FRAMES_PER_PACKET as u32 + 1
    }

    pub fn bitrate_bps(self) -> u32 {
        self.packet_bits() * 1000 / PACKET_MS
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecVersion::Codec2_1200 => "codec2-1200",
            CodecVersion::CqnvV1 => "v1",
            CodecVersion::CqnvV2 => "v2",
            CodecVersion::CqnvV3 => "v3",
        }
    }
}

impl fmt::Display for CodecVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown codec version `{s}`")))
    }
}

/// Quantized indices of one 40 ms packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Packet {
    pub lsp: [u16; 3],
    pub pitch_energy: [u16; 2],
    pub voicing: [bool; FRAMES_PER_PACKET],
    pub spare: bool,
}

/// A packed packet: the low `len` bits of `bits`, first field in the most
/// significant position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedPacket {
    pub bits: u64,
    pub len: u32,
}

impl fmt::Display for PackedPacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len).rev() {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn put(acc: &mut u64, field: &'static str, value: u32, width: u32) -> Result<()> {
    if width < 32 && value >> width != 0 {
        return Err(Error::FieldOverflow { field, value, width });
    }
    *acc = (*acc << width) | value as u64;
    Ok(())
}

pub fn pack(version: CodecVersion, packet: &Packet) -> Result<PackedPacket> {
    let mut acc = 0u64;
    for (v, w) in packet.lsp.iter().zip(version.lsp_widths()) {
        put(&mut acc, "lsp", *v as u32, w)?;
    }
    for v in packet.pitch_energy {
        put(&mut acc, "pitch_energy", v as u32, version.pe_width())?;
    }
    for v in packet.voicing {
        put(&mut acc, "voicing", v as u32, 1)?;
    }
    put(&mut acc, "spare", packet.spare as u32, 1)?;
    Ok(PackedPacket {
        bits: acc,
        len: version.packet_bits(),
    })
}

pub fn unpack(version: CodecVersion, packed: PackedPacket) -> Result<Packet> {
    let expected = version.packet_bits();
    if packed.len != expected {
        return Err(Error::PacketLength {
            expected,
            actual: packed.len,
        });
    }
    if expected < 64 && packed.bits >> expected != 0 {
        return Err(Error::PacketLength {
            expected,
            actual: 64 - packed.bits.leading_zeros(),
        });
    }
    let mut remaining = expected;
    let mut take = |width: u32| -> u32 {
        remaining -= width;
        ((packed.bits >> remaining) & ((1u64 << width) - 1)) as u32
    };
    let mut packet = Packet::default();
    for (slot, w) in packet.lsp.iter_mut().zip(version.lsp_widths()) {
        *slot = take(w) as u16;
    }
    let pe = version.pe_width();
    for slot in packet.pitch_energy.iter_mut() {
        *slot = take(pe) as u16;
    }
    for slot in packet.voicing.iter_mut() {
        *slot = take(1) == 1;
    }
    packet.spare = take(1) == 1;
    Ok(packet)
}

/// MSB-first bit writer.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            if self.bit_len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Bytes with the final partial byte zero-padded.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// MSB-first bit reader.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        if self.pos + width as usize > self.bytes.len() * 8 {
            return Err(Error::Truncated("bitstream"));
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

pub const STREAM_MAGIC: &[u8; 4] = b"CQNV";
pub const STREAM_FORMAT_VERSION: u8 = 1;
/// Magic, format version, codec id, packet count.
pub const STREAM_HEADER_BYTES: usize = 4 + 1 + 1 + 4;
pub const STREAM_TRAILER_BYTES: usize = 4;

/// Serializes packets into a `CQNV` container: header, bit-contiguous
/// packets zero-padded to a byte boundary, then CRC32 of everything before.
pub fn write_stream(version: CodecVersion, packets: &[Packet]) -> Result<Vec<u8>> {
    let count = u32::try_from(packets.len())
        .map_err(|_| Error::InvalidParameter("too many packets".into()))?;
    let mut writer = BitWriter::new();
    for p in packets {
        let packed = pack(version, p)?;
        writer.write(packed.bits, packed.len);
    }
    let mut out = Vec::with_capacity(STREAM_HEADER_BYTES + writer.bit_len().div_ceil(8) + 4);
    out.extend_from_slice(STREAM_MAGIC);
    out.push(STREAM_FORMAT_VERSION);
    out.push(version.id());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&writer.into_bytes());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Exact container size in bytes for `n` packets.
pub fn stream_size(version: CodecVersion, n: usize) -> usize {
    STREAM_HEADER_BYTES + (n * version.packet_bits() as usize).div_ceil(8) + STREAM_TRAILER_BYTES
}

pub fn read_stream(bytes: &[u8]) -> Result<(CodecVersion, Vec<Packet>)> {
    if bytes.len() < STREAM_HEADER_BYTES + STREAM_TRAILER_BYTES {
        return Err(Error::Truncated("stream header"));
    }
    if &bytes[..4] != STREAM_MAGIC {
        return Err(Error::BadMagic { expected: "CQNV" });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - STREAM_TRAILER_BYTES);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4-byte trailer"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::CrcMismatch { stored, computed });
    }
    if bytes[4] != STREAM_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            what: "stream format",
            version: bytes[4],
        });
    }
    let version = CodecVersion::from_id(bytes[5])?;
    let count = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    if stream_size(version, count) != bytes.len() {
        return Err(Error::Truncated("stream payload"));
    }
    let mut reader = BitReader::new(&body[STREAM_HEADER_BYTES..]);
    let len = version.packet_bits();
    let packets = (0..count)
        .map(|_| {
            let bits = reader.read(len)?;
            unpack(version, PackedPacket { bits, len })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((version, packets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_packet(version: CodecVersion) -> impl Strategy<Value = Packet> {
        let [a, b, c] = version.lsp_widths();
        let pe = version.pe_width();
        (
            0u16..(1 << a),
            0u16..(1 << b),
            0u16..(1 << c),
            0u16..(1 << pe),
            0u16..(1 << pe),
            prop::array::uniform4(any::<bool>()),
        )
            .prop_map(|(l0, l1, l2, p0, p1, voicing)| Packet {
                lsp: [l0, l1, l2],
                pitch_energy: [p0, p1],
                voicing,
                spare: false,
            })
    }

    #[test]
    fn packet_sizes_and_rates() {
        let expected = [(48, 1200), (44, 1100), (44, 1100), (40, 1000)];
        for (v, (bits, rate)) in CodecVersion::ALL.iter().zip(expected) {
            assert_eq!(v.packet_bits(), bits, "{v}");
            assert_eq!(v.bitrate_bps(), rate, "{v}");
        }
    }

    #[test]
    fn profile_mapping_is_total() {
        for v in CodecVersion::ALL {
            assert_eq!(CodecVersion::from_profile(v.profile()), v);
            assert_eq!(v.name().parse::<CodecVersion>().unwrap(), v);
            assert_eq!(CodecVersion::from_id(v.id()).unwrap(), v);
        }
        let v3 = CodecVersion::CqnvV3.profile();
        assert_eq!((v3.lsp_bits(), v3.pe_bits()), (23, 12));
        let c2 = CodecVersion::Codec2_1200.profile();
        assert_eq!((c2.lsp_bits(), c2.pe_bits()), (27, 16));
    }

    #[test]
    fn zero_packet_packs_to_zero() {
        for v in CodecVersion::ALL {
            let p = pack(v, &Packet::default()).unwrap();
            assert_eq!(p.bits, 0);
            assert_eq!(p.len, v.packet_bits());
        }
    }

    #[test]
    fn worked_example_v3() {
        let p = Packet {
            lsp: [0x1a5, 0x33, 0x7f],
            pitch_energy: [0x2a, 0x01],
            voicing: [true, false, true, true],
            spare: false,
        };
        let packed = pack(CodecVersion::CqnvV3, &p).unwrap();
        assert_eq!(
            packed.to_string(),
            "110100101\
             0110011\
             1111111\
             101010\
             000001\
             1011\
             0"
        );
        let bytes = write_stream(CodecVersion::CqnvV3, &[p]).unwrap();
        assert_eq!(&bytes[..10], b"CQNV\x01\x03\x01\x00\x00\x00");
        assert_eq!(&bytes[10..15], &[0xd2, 0xb3, 0xff, 0x50, 0x36]);
        // CRC32 (IEEE) of the 15 bytes above, little-endian
        assert_eq!(&bytes[15..], &[0x12, 0x1b, 0xd5, 0x28]);
    }

    #[test]
    fn overflow_rejected() {
        let p = Packet {
            lsp: [0, 128, 0],
            ..Packet::default()
        };
        assert!(matches!(
            pack(CodecVersion::CqnvV3, &p),
            Err(Error::FieldOverflow { field: "lsp", value: 128, width: 7 })
        ));
        assert!(pack(CodecVersion::Codec2_1200, &p).is_ok());
    }

    #[test]
    fn wrong_length_rejected() {
        let packed = PackedPacket { bits: 0, len: 44 };
        assert!(matches!(
            unpack(CodecVersion::CqnvV3, packed),
            Err(Error::PacketLength { expected: 40, actual: 44 })
        ));
    }

    #[test]
    fn container_accounting_and_crc() {
        let packets = vec![Packet::default(); 25];
        let bytes = write_stream(CodecVersion::CqnvV3, &packets).unwrap();
        assert_eq!(bytes.len(), 10 + 125 + 4);
        assert_eq!(bytes.len(), stream_size(CodecVersion::CqnvV3, 25));
        let mut bad = bytes.clone();
        bad[20] ^= 1;
        assert!(matches!(read_stream(&bad), Err(Error::CrcMismatch { .. })));
        assert!(read_stream(&bytes[..8]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_v3(p in arb_packet(CodecVersion::CqnvV3)) {
            let packed = pack(CodecVersion::CqnvV3, &p).unwrap();
            prop_assert_eq!(unpack(CodecVersion::CqnvV3, packed).unwrap(), p);
        }

        #[test]
        fn stream_round_trip(ps in prop::collection::vec(arb_packet(CodecVersion::CqnvV1), 0..40)) {
            let bytes = write_stream(CodecVersion::CqnvV1, &ps).unwrap();
            prop_assert_eq!(bytes.len(), stream_size(CodecVersion::CqnvV1, ps.len()));
            let (v, back) = read_stream(&bytes).unwrap();
            prop_assert_eq!(v, CodecVersion::CqnvV1);
            prop_assert_eq!(back, ps);
        }
    }
}
