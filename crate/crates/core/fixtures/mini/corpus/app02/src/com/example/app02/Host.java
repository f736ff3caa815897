package com.example.app02;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 2;
        String title = "screen 2";
        System.out.println(title);
    }

    public void configure() {
        TrustManager tm = new X509TrustManager() {
            public void checkClientTrusted(X509Certificate[] chain, String authType) throws CertificateException { }
            public void checkServerTrusted(X509Certificate[] chain, String authType) throws CertificateException { }
            public X509Certificate[] getAcceptedIssuers() { return null; }
        };
    }

    public int compute(int a, int b) {
        int s = a * 4 + b;
        return s;
    }
}
