#include <linux/types.h>
#include <linux/ktime.h>
#include <net/tcp.h>

static u32 net_secret[4] __read_mostly;
static u64 net_secret_birth;

#define NET_SECRET_LIFETIME_NS 600000000000ULL

extern void get_random_bytes(void *buf, int len);
extern u64 ktime_get_ns(void);
extern u32 siphash_4u32(u32 a, u32 b, u32 c, u32 d, const u32 *key);

/* Fill the secret key with fresh random bits. */
static void net_secret_init(void)
{
	get_random_bytes(net_secret, sizeof(net_secret));
	net_secret_birth = ktime_get_ns();
}

/*
 * Reseed the secret key once it has been in use longer than
 * NET_SECRET_LIFETIME_NS, so a leaked key is only useful for a bounded time.
 */
static void net_secret_rekey(void)
{
	u64 now = ktime_get_ns();

	if (net_secret_birth == 0 || now - net_secret_birth > NET_SECRET_LIFETIME_NS)
		net_secret_init();
}

/* The 4 microsecond clock M of the ISN formula. */
static u32 seq_scale(u32 seq)
{
	return seq + (u32)(ktime_get_ns() >> 6);
}

u32 secure_tcp_seq(__be32 saddr, __be32 daddr, __be16 sport, __be16 dport)
{
	u32 hash;

	net_secret_rekey();
	hash = siphash_4u32(saddr, daddr, ((u32)sport << 16) | dport, 0, net_secret);
	return seq_scale(hash);
}
